#include "sparselms/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>
#include <vector>

namespace sparselms {

namespace {

// ---------------------------------------------------------------------------
// Small text helpers
// ---------------------------------------------------------------------------

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\f\v";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      parts.push_back(s.substr(pos));
      return parts;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

bool parse_long(std::string_view s, long& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

bool parse_int(std::string_view s, int& out) {
  long v = 0;
  if (!parse_long(s, v) || v < INT_MIN || v > INT_MAX) return false;
  out = static_cast<int>(v);
  return true;
}

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// 17 significant digits: exact round-trip for any double.
std::string format_double_full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string format_sci(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", decimals, v);
  return buf;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

struct Entry {
  int line{};
  std::string value;
};

[[noreturn]] void fail_key(int line, const std::string& key, const std::string& what) {
  throw config_error("line " + std::to_string(line) + ", key '" + key + "': " + what);
}

std::optional<AlgorithmKind> kind_from_name(std::string_view name) {
  if (name == "lms") return AlgorithmKind::lms;
  if (name == "llms") return AlgorithmKind::llms;
  if (name == "lp_lms") return AlgorithmKind::lp_lms;
  if (name == "lp_llms") return AlgorithmKind::lp_llms;
  return std::nullopt;
}

const ExperimentConfig& benchmark_defaults() {
  static const ExperimentConfig cfg = default_config();
  return cfg;
}

FilterParams<double> default_params(AlgorithmKind kind) {
  for (const auto& alg : benchmark_defaults().algorithms) {
    if (alg.kind == kind) return alg.params;
  }
  return {};
}

bool accepts_param(AlgorithmKind kind, std::string_view param) {
  if (param == "mu") return true;
  if (param == "gamma") return kind == AlgorithmKind::llms || kind == AlgorithmKind::lp_llms;
  if (param == "rho_p" || param == "epsilon_p" || param == "p") {
    return kind == AlgorithmKind::lp_lms || kind == AlgorithmKind::lp_llms;
  }
  if (param == "leak_sign") return kind == AlgorithmKind::lp_llms;
  return false;
}

bool is_param_name(std::string_view param) {
  return param == "mu" || param == "gamma" || param == "rho_p" || param == "epsilon_p" ||
         param == "p" || param == "leak_sign";
}

void apply_param(AlgorithmSpec& alg, std::string_view param, std::string_view value, int line,
                 const std::string& key) {
  FilterParams<double>& prm = alg.params;
  if (param == "leak_sign") {
    if (value == "plus") {
      prm.leak_sign = LeakSign::plus;
    } else if (value == "minus") {
      prm.leak_sign = LeakSign::minus;
    } else {
      fail_key(line, key, "expected 'plus' or 'minus'");
    }
    return;
  }
  double v = 0;
  if (!parse_double(value, v) || !std::isfinite(v)) {
    fail_key(line, key, "unparseable value '" + std::string(value) + "'");
  }
  if (param == "mu") {
    if (!(v > 0)) fail_key(line, key, "mu must be positive");
    prm.mu = v;
  } else if (param == "gamma") {
    if (!(v >= 0)) fail_key(line, key, "gamma must be non-negative");
    if (alg.kind == AlgorithmKind::llms && !(v < 1)) {
      fail_key(line, key, "gamma must lie in [0,1) for llms");
    }
    prm.gamma = v;
  } else if (param == "rho_p") {
    if (!(v >= 0)) fail_key(line, key, "rho_p must be non-negative");
    prm.rho_p = v;
  } else if (param == "epsilon_p") {
    if (!(v >= 0)) fail_key(line, key, "epsilon_p must be non-negative");
    prm.epsilon_p = v;
  } else if (param == "p") {
    if (!(v > 0 && v < 1)) fail_key(line, key, "p must lie in (0,1)");
    prm.p = v;
  }
}

struct PhaseDraft {
  std::optional<long> length;
  std::optional<int> sparsity;
  std::optional<double> rho_p;
  int first_line{};
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  {
    int line_no = 0;
    for (std::string_view rest = text; !rest.empty() || line_no == 0;) {
      ++line_no;
      const auto nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

      const auto hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;

      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) {
        throw config_error("line " + std::to_string(line_no) + ": missing key before '='");
      }
      if (value.empty()) fail_key(line_no, key, "missing value");
      const auto [it, inserted] = entries.insert({key, Entry{line_no, value}});
      if (!inserted) {
        fail_key(line_no, key, "duplicate (first set on line " + std::to_string(it->second.line) + ")");
      }
    }
  }

  const auto take = [&entries](const std::string& key) -> std::optional<Entry> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    Entry e = it->second;
    entries.erase(it);
    return e;
  };

  ExperimentConfig cfg = benchmark_defaults();

  // Algorithm selection first: parameter keys refer to the selected set.
  if (const auto e = take("algorithms")) {
    cfg.algorithms.clear();
    for (const auto part : split(e->value, ',')) {
      const std::string name(trim(part));
      const auto kind = kind_from_name(name);
      if (!kind) {
        fail_key(e->line, "algorithms",
                 "unknown algorithm '" + name + "' (expected lms, llms, lp_lms or lp_llms)");
      }
      for (const auto& prev : cfg.algorithms) {
        if (prev.name == name) fail_key(e->line, "algorithms", "algorithm '" + name + "' listed twice");
      }
      cfg.algorithms.push_back({name, *kind, default_params(*kind)});
    }
    if (cfg.algorithms.empty()) fail_key(e->line, "algorithms", "needs at least one algorithm");
  }

  // Phase table: any phaseK.* key replaces the default schedule entirely.
  {
    std::map<int, PhaseDraft> drafts;
    std::vector<std::string> phase_keys;
    for (const auto& [key, entry] : entries) {
      if (key.rfind("phase", 0) == 0 && key.find('.') != std::string::npos) phase_keys.push_back(key);
    }
    for (const auto& key : phase_keys) {
      const Entry e = *take(key);
      const auto dot = key.find('.');
      const std::string_view index_text = std::string_view(key).substr(5, dot - 5);
      int index = 0;
      if (!parse_int(index_text, index)) fail_key(e.line, key, "unknown key");
      if (index < 1) fail_key(e.line, key, "phase numbering starts at 1");
      const std::string_view field = std::string_view(key).substr(dot + 1);

      PhaseDraft& draft = drafts.try_emplace(index, PhaseDraft{{}, {}, {}, e.line}).first->second;
      if (field == "length") {
        long v = 0;
        if (!parse_long(e.value, v)) fail_key(e.line, key, "unparseable value '" + e.value + "'");
        if (v < 1) fail_key(e.line, key, "length must be >= 1");
        draft.length = v;
      } else if (field == "sparsity") {
        int v = 0;
        if (!parse_int(e.value, v)) fail_key(e.line, key, "unparseable value '" + e.value + "'");
        if (v < 1) fail_key(e.line, key, "sparsity must be >= 1");
        draft.sparsity = v;
      } else if (field == "rho_p") {
        double v = 0;
        if (!parse_double(e.value, v) || !std::isfinite(v)) {
          fail_key(e.line, key, "unparseable value '" + e.value + "'");
        }
        if (v < 0) fail_key(e.line, key, "rho_p must be non-negative");
        draft.rho_p = v;
      } else {
        fail_key(e.line, key, "unknown phase field '" + std::string(field) + "'");
      }
    }
    if (!drafts.empty()) {
      const int n_phases = drafts.rbegin()->first;
      cfg.schedule.clear();
      for (int k = 1; k <= n_phases; ++k) {
        const auto it = drafts.find(k);
        if (it == drafts.end()) {
          throw config_error("phase " + std::to_string(k) +
                             " is missing; declared phases must be numbered contiguously from 1");
        }
        const PhaseDraft& draft = it->second;
        if (!draft.length || !draft.sparsity) {
          throw config_error("line " + std::to_string(draft.first_line) + ": phase " +
                             std::to_string(k) + " needs both phase" + std::to_string(k) +
                             ".length and phase" + std::to_string(k) + ".sparsity");
        }
        cfg.schedule.push_back({*draft.length, *draft.sparsity, draft.rho_p});
      }
    }
  }

  // Plain scalar keys.
  if (const auto e = take("seed")) {
    if (!parse_u64(e->value, cfg.seed)) fail_key(e->line, "seed", "unparseable value '" + e->value + "'");
  }
  if (const auto e = take("trials")) {
    if (!parse_int(e->value, cfg.n_trials)) fail_key(e->line, "trials", "unparseable value '" + e->value + "'");
    if (cfg.n_trials < 1) fail_key(e->line, "trials", "must be >= 1");
  }
  if (const auto e = take("taps")) {
    if (!parse_int(e->value, cfg.n_taps)) fail_key(e->line, "taps", "unparseable value '" + e->value + "'");
    if (cfg.n_taps < 1) fail_key(e->line, "taps", "must be >= 1");
  }
  if (const auto e = take("steady_state_window")) {
    if (!parse_int(e->value, cfg.steady_state_window)) {
      fail_key(e->line, "steady_state_window", "unparseable value '" + e->value + "'");
    }
    if (cfg.steady_state_window < 1) fail_key(e->line, "steady_state_window", "must be >= 1");
  }
  if (const auto e = take("normalize_mode")) {
    if (e->value == "theoretical") {
      cfg.ar1.normalize = NormalizeMode::theoretical;
    } else if (e->value == "empirical") {
      cfg.ar1.normalize = NormalizeMode::empirical;
    } else {
      fail_key(e->line, "normalize_mode", "expected 'theoretical' or 'empirical'");
    }
  }
  if (const auto e = take("ar1.a")) {
    double v = 0;
    if (!parse_double(e->value, v) || !std::isfinite(v)) {
      fail_key(e->line, "ar1.a", "unparseable value '" + e->value + "'");
    }
    if (!(std::abs(v) < 1)) fail_key(e->line, "ar1.a", "must satisfy |a| < 1");
    cfg.ar1.a = v;
  }
  if (const auto e = take("ar1.innovation_variance")) {
    double v = 0;
    if (!parse_double(e->value, v) || !std::isfinite(v)) {
      fail_key(e->line, "ar1.innovation_variance", "unparseable value '" + e->value + "'");
    }
    if (!(v > 0)) fail_key(e->line, "ar1.innovation_variance", "must be positive");
    cfg.ar1.innovation_variance = v;
  }
  if (const auto e = take("noise.variance")) {
    double v = 0;
    if (!parse_double(e->value, v) || !std::isfinite(v)) {
      fail_key(e->line, "noise.variance", "unparseable value '" + e->value + "'");
    }
    if (v < 0) fail_key(e->line, "noise.variance", "must be non-negative");
    cfg.noise.variance = v;
  }

  // Bare parameter keys apply to every selected algorithm that takes the
  // parameter; algorithm-qualified keys below override them.
  for (const char* pn : {"mu", "gamma", "rho_p", "epsilon_p", "p", "leak_sign"}) {
    const auto e = take(pn);
    if (!e) continue;
    bool applied = false;
    for (auto& alg : cfg.algorithms) {
      if (!accepts_param(alg.kind, pn)) continue;
      apply_param(alg, pn, e->value, e->line, pn);
      applied = true;
    }
    if (!applied) fail_key(e->line, pn, "no configured algorithm takes this parameter");
  }
  {
    std::vector<std::string> qualified;
    for (const auto& [key, entry] : entries) {
      const auto dot = key.find('.');
      if (dot != std::string::npos && kind_from_name(std::string_view(key).substr(0, dot))) {
        qualified.push_back(key);
      }
    }
    for (const auto& key : qualified) {
      const Entry e = *take(key);
      const auto dot = key.find('.');
      const std::string name = key.substr(0, dot);
      const std::string param = key.substr(dot + 1);
      if (!is_param_name(param)) fail_key(e.line, key, "unknown parameter '" + param + "'");
      AlgorithmSpec* alg = nullptr;
      for (auto& a : cfg.algorithms) {
        if (a.name == name) alg = &a;
      }
      if (!alg) fail_key(e.line, key, "algorithm '" + name + "' is not in the configured set");
      if (!accepts_param(alg->kind, param)) {
        fail_key(e.line, key, "parameter '" + param + "' does not apply to " + name);
      }
      apply_param(*alg, param, e.value, e.line, key);
    }
  }

  if (!entries.empty()) {
    const auto worst = std::min_element(entries.begin(), entries.end(),
                                        [](const auto& a, const auto& b) {
                                          return a.second.line < b.second.line;
                                        });
    fail_key(worst->second.line, worst->first, "unknown key");
  }

  try {
    validate_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  const auto emit = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };

  emit("seed", std::to_string(cfg.seed));
  emit("trials", std::to_string(cfg.n_trials));
  emit("taps", std::to_string(cfg.n_taps));
  emit("steady_state_window", std::to_string(cfg.steady_state_window));
  emit("normalize_mode",
       cfg.ar1.normalize == NormalizeMode::theoretical ? "theoretical" : "empirical");
  emit("ar1.a", format_double(cfg.ar1.a));
  emit("ar1.innovation_variance", format_double(cfg.ar1.innovation_variance));
  emit("noise.variance", format_double(cfg.noise.variance));
  {
    std::string names;
    for (const auto& alg : cfg.algorithms) {
      if (!names.empty()) names += ", ";
      names += alg.name;
    }
    emit("algorithms", names);
  }

  out += '\n';
  for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
    const std::string prefix = "phase" + std::to_string(k + 1);
    emit(prefix + ".length", std::to_string(cfg.schedule[k].span));
    emit(prefix + ".sparsity", std::to_string(cfg.schedule[k].n_nonzero));
    if (cfg.schedule[k].rho_p_override) {
      emit(prefix + ".rho_p", format_double(*cfg.schedule[k].rho_p_override));
    }
  }

  out += '\n';
  for (const auto& alg : cfg.algorithms) {
    const FilterParams<double>& prm = alg.params;
    emit(alg.name + ".mu", format_double(prm.mu));
    if (accepts_param(alg.kind, "gamma")) emit(alg.name + ".gamma", format_double(prm.gamma));
    if (accepts_param(alg.kind, "rho_p")) {
      emit(alg.name + ".rho_p", format_double(prm.rho_p));
      emit(alg.name + ".epsilon_p", format_double(prm.epsilon_p));
      emit(alg.name + ".p", format_double(prm.p));
    }
    if (accepts_param(alg.kind, "leak_sign")) {
      emit(alg.name + ".leak_sign", prm.leak_sign == LeakSign::plus ? "plus" : "minus");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curve CSV
// ---------------------------------------------------------------------------

std::string curve_csv(const MsdCurve& curve) {
  std::string out;
  out.reserve(static_cast<std::size_t>(curve.values.rows() + 1) *
              (static_cast<std::size_t>(curve.values.cols()) * 27 + 12));
  out += "iteration";
  for (const auto& name : curve.algorithm_names) {
    out += ",msd_";
    out += name;
  }
  out += '\n';
  for (Eigen::Index k = 0; k < curve.values.rows(); ++k) {
    out += std::to_string(k);
    for (Eigen::Index a = 0; a < curve.values.cols(); ++a) {
      out += ',';
      out += format_double_full(curve.values(k, a));
    }
    out += '\n';
  }
  return out;
}

CsvData parse_curve_csv(const std::string& text) {
  std::vector<std::string_view> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw csv_error("row 1: missing header");

  const auto header = split(lines[0], ',');
  if (header.empty() || trim(header[0]) != "iteration") {
    throw csv_error("row 1: header must start with 'iteration'");
  }
  CsvData data;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string_view field = trim(header[c]);
    if (field.rfind("msd_", 0) != 0 || field.size() <= 4) {
      throw csv_error("row 1: column " + std::to_string(c + 1) + " must be named msd_<algorithm>");
    }
    data.algorithm_names.emplace_back(field.substr(4));
  }
  if (data.algorithm_names.empty()) throw csv_error("row 1: no msd_ columns");
  if (lines.size() < 2) throw csv_error("no data rows");

  const auto n_rows = static_cast<Eigen::Index>(lines.size() - 1);
  const auto n_cols = static_cast<Eigen::Index>(data.algorithm_names.size());
  data.values.resize(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const std::string row_label = "row " + std::to_string(r + 2);
    const auto fields = split(lines[static_cast<std::size_t>(r) + 1], ',');
    if (trim(lines[static_cast<std::size_t>(r) + 1]).empty()) {
      throw csv_error(row_label + ": empty row");
    }
    if (static_cast<Eigen::Index>(fields.size()) != n_cols + 1) {
      throw csv_error(row_label + ": expected " + std::to_string(n_cols + 1) + " fields, found " +
                      std::to_string(fields.size()));
    }
    long iteration = -1;
    if (!parse_long(trim(fields[0]), iteration)) {
      throw csv_error(row_label + ": unparseable iteration '" + std::string(trim(fields[0])) + "'");
    }
    if (iteration != r) {
      throw csv_error(row_label + ": iteration index " + std::to_string(iteration) +
                      ", expected " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      double v = 0;
      const std::string_view field = trim(fields[static_cast<std::size_t>(c) + 1]);
      if (!parse_double(field, v)) {
        throw csv_error(row_label + ": unparseable value '" + std::string(field) + "' in column " +
                        std::to_string(c + 2));
      }
      data.values(r, c) = v;
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string steady_state_table(const SteadyStateReport& report) {
  std::string out = "steady-state MSD, mean of the last " + std::to_string(report.window) +
                    " iterations of each phase\n\n";

  std::size_t name_w = std::string("algorithm").size();
  for (const auto& name : report.algorithm_names) name_w = std::max(name_w, name.size());
  std::size_t db_w = std::string("msd_db").size();
  std::size_t lin_w = std::string("msd_linear").size();
  for (Eigen::Index ph = 0; ph < report.db.rows(); ++ph) {
    for (Eigen::Index a = 0; a < report.db.cols(); ++a) {
      db_w = std::max(db_w, format_fixed(report.db(ph, a), 4).size());
      lin_w = std::max(lin_w, format_sci(report.linear(ph, a), 6).size());
    }
  }

  out += pad_right("phase", 5) + "  " + pad_right("algorithm", name_w) + "  " +
         pad_left("msd_db", db_w) + "  " + pad_left("msd_linear", lin_w) + "\n";
  for (Eigen::Index ph = 0; ph < report.db.rows(); ++ph) {
    for (Eigen::Index a = 0; a < report.db.cols(); ++a) {
      out += pad_right(std::to_string(ph + 1), 5) + "  " +
             pad_right(report.algorithm_names[static_cast<std::size_t>(a)], name_w) + "  " +
             pad_left(format_fixed(report.db(ph, a), 4), db_w) + "  " +
             pad_left(format_sci(report.linear(ph, a), 6), lin_w) + "\n";
    }
  }
  return out;
}

std::string run_meta_text(const ExperimentConfig& cfg, const ExperimentResult& result,
                          const LambdaMaxReport& lambda) {
  std::string out = "# resolved configuration\n";
  out += render_config(cfg);
  out += "\n# diagnostics\n";
  out += "total_iterations = " + std::to_string(cfg.total_iterations()) + "\n";
  out += "lambda_max = " + format_double(lambda.lambda_max) + "\n";
  out += "mu_bound = " + format_double(lambda.mu_bound) + "\n";
  for (const auto& alg : cfg.algorithms) {
    const bool ok = alg.params.mu < lambda.mu_bound;
    out += "mu_check." + alg.name + " = " + (ok ? "ok" : "exceeded") + " (" +
           format_double(alg.params.mu) + (ok ? " < " : " >= ") + format_double(lambda.mu_bound) +
           ")\n";
  }
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    out += "trials_used." + cfg.algorithms[a].name + " = " +
           std::to_string(result.curve.trials_used[a]) + "\n";
  }
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    out += "diverged_trials." + cfg.algorithms[a].name + " = " +
           std::to_string(result.diverged_trials[a].size()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot script
// ---------------------------------------------------------------------------

namespace {

std::string gnuplot_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    out += c;
    if (c == '\'') out += c;
  }
  out += "'";
  return out;
}

}  // namespace

std::string plot_script(const std::string& csv_path,
                        const std::vector<std::string>& algorithm_names,
                        const std::vector<long>& phase_marks) {
  std::string out;
  out += "# gnuplot script; render with e.g.:  gnuplot -e \"set terminal pngcairo size 900,600; "
         "set output 'msd.png'\" <this file>\n";
  out += "set datafile separator ','\n";
  out += "set xlabel 'iteration'\n";
  out += "set ylabel 'MSD (dB)'\n";
  out += "set grid\n";
  out += "set key top right\n";
  for (const long mark : phase_marks) {
    out += "set arrow from " + std::to_string(mark) + ", graph 0 to " + std::to_string(mark) +
           ", graph 1 nohead dashtype 2\n";
  }
  out += "plot ";
  for (std::size_t a = 0; a < algorithm_names.size(); ++a) {
    if (a > 0) out += ", \\\n     ";
    out += (a == 0 ? gnuplot_quote(csv_path) : std::string("''"));
    out += " every ::1 using 1:(10*log10($" + std::to_string(a + 2) + ")) with lines title " +
           gnuplot_quote(algorithm_names[a]) + " noenhanced";
  }
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw io_error("read failed on '" + path + "'");
  return std::move(buf).str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw io_error("write failed on '" + path + "'");
}

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int cmd_run(const RunOptions& opt) {
  try {
    ExperimentConfig cfg =
        opt.config_path.empty() ? default_config() : parse_config(read_text_file(opt.config_path));
    if (opt.seed) cfg.seed = *opt.seed;

    const LambdaMaxReport lambda = estimate_lambda_max(cfg.ar1, cfg.n_taps);
    const ExperimentResult result = run_experiment(cfg, opt.n_threads);

    const std::filesystem::path dir(opt.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec && !std::filesystem::is_directory(dir)) {
      throw io_error("cannot create output directory '" + opt.out_dir + "': " + ec.message());
    }

    write_text_file((dir / "run_meta.txt").string(), run_meta_text(cfg, result, lambda));

    std::vector<std::string> dead;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      if (!result.curve.valid[a]) dead.push_back(cfg.algorithms[a].name);
    }
    if (!dead.empty()) {
      std::string names;
      for (const auto& name : dead) {
        if (!names.empty()) names += ", ";
        names += name;
      }
      std::cerr << "error: every trial diverged for: " << names << " (see "
                << (dir / "run_meta.txt").string() << ")\n";
      return exit_code::divergence;
    }

    write_text_file((dir / "msd.csv").string(), curve_csv(result.curve));
    write_text_file((dir / "steady_state.txt").string(), steady_state_table(result.steady_state));

    std::cout << steady_state_table(result.steady_state) << '\n'
              << "wrote " << (dir / "msd.csv").string() << ", "
              << (dir / "steady_state.txt").string() << ", " << (dir / "run_meta.txt").string()
              << '\n';
    return exit_code::ok;
  } catch (const config_error& e) {
    return report_error(e, exit_code::config);
  } catch (const io_error& e) {
    return report_error(e, exit_code::io);
  } catch (const std::invalid_argument& e) {
    return report_error(e, exit_code::config);
  }
}

int cmd_plot(const PlotOptions& opt) {
  try {
    const CsvData data = parse_curve_csv(read_text_file(opt.csv_path));
    std::vector<long> marks;
    if (data.values.rows() == 24000) marks = {8000, 16000};
    write_text_file(opt.out_path, plot_script(opt.csv_path, data.algorithm_names, marks));
    std::cout << "wrote " << opt.out_path << '\n';
    return exit_code::ok;
  } catch (const csv_error& e) {
    return report_error(e, exit_code::config);
  } catch (const io_error& e) {
    return report_error(e, exit_code::io);
  }
}

int cmd_demo(const DemoOptions& opt) {
  try {
    ExperimentConfig cfg = default_config();
    cfg.n_trials = 20;
    if (opt.seed) cfg.seed = *opt.seed;

    const ExperimentResult result = run_experiment(cfg, opt.n_threads);
    bool any_dead = false;
    for (const bool v : result.curve.valid) any_dead |= !v;
    if (any_dead) {
      std::cerr << "error: every trial diverged for at least one algorithm\n";
      return exit_code::divergence;
    }

    const SteadyStateReport& ss = result.steady_state;
    std::size_t name_w = 0;
    for (const auto& name : ss.algorithm_names) name_w = std::max(name_w, name.size());

    std::cout << "demo benchmark: " << cfg.n_trials << " trials, seed " << cfg.seed << ", "
              << cfg.total_iterations() << " iterations, " << cfg.n_taps << " taps\n";
    for (Eigen::Index ph = 0; ph < ss.db.rows(); ++ph) {
      const auto& phase = cfg.schedule[static_cast<std::size_t>(ph)];
      std::cout << "\nphase " << (ph + 1) << " (" << phase.n_nonzero << " of " << cfg.n_taps
                << " taps nonzero)\n";
      std::vector<Eigen::Index> order(static_cast<std::size_t>(ss.db.cols()));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) { return ss.db(ph, a) < ss.db(ph, b); });
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const Eigen::Index a = order[rank];
        std::cout << "  " << (rank + 1) << ". "
                  << pad_right(ss.algorithm_names[static_cast<std::size_t>(a)], name_w) << "  "
                  << pad_left(format_fixed(ss.db(ph, a), 4), 9) << " dB\n";
      }
    }
    return exit_code::ok;
  } catch (const std::invalid_argument& e) {
    return report_error(e, exit_code::config);
  } catch (const io_error& e) {
    return report_error(e, exit_code::io);
  }
}

}  // namespace sparselms
