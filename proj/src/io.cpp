#include "cmvdlm/io.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cmvdlm/errors.hpp"
#include "json.hpp"

namespace cmvdlm::io {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Comma- and/or whitespace-separated list.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() &&
         std::isfinite(*out);
}

bool parse_integer(const std::string& s, long long* out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "failed writing '" + path + "'");
}

// --- config value parsing ------------------------------------------------

class ConfigReader {
 public:
  ConfigReader(const boost::property_tree::ptree& tree, std::string source)
      : tree_(tree), source_(std::move(source)) {}

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void real(const std::string& key, double* out) {
    if (auto v = raw(key)) {
      if (!parse_number(*v, out)) bad(key, *v, "a number");
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int* out) {
    if (auto v = raw(key)) {
      long long x = 0;
      if (!parse_integer(*v, &x)) bad(key, *v, "an integer");
      *out = static_cast<Int>(x);
    }
  }

  void boolean(const std::string& key, bool* out) {
    if (auto v = raw(key)) {
      std::string s = *v;
      std::transform(s.begin(), s.end(), s.begin(), ::tolower);
      if (s == "true" || s == "yes" || s == "1") {
        *out = true;
      } else if (s == "false" || s == "no" || s == "0") {
        *out = false;
      } else {
        bad(key, *v, "true or false");
      }
    }
  }

  void names(const std::string& key, std::vector<std::string>* out) {
    if (auto v = raw(key)) *out = split_list(*v);
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) {
      double x = 0.0;
      if (!parse_number(item, &x)) bad(key, *v, "a list of numbers");
      out.push_back(x);
    }
    return out;
  }

  [[noreturn]] void bad(const std::string& key, const std::string& value,
                        const std::string& expected) {
    fail(ErrorKind::kConfig, source_ + ": " + key + " = '" + value +
                                 "' is not " + expected);
  }

  // Every key present in the file must have been read.
  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        fail(ErrorKind::kConfig, source_ + ": key '" + section +
                                     "' must be inside a [section]");
      }
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) {
          fail(ErrorKind::kConfig, source_ + ": unknown key '" + full + "'");
        }
      }
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::string source_;
  std::set<std::string> seen_;
};

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix to_square(const std::vector<double>& v, const std::string& key) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(v.size())));
  if (n * n != static_cast<Eigen::Index>(v.size()) || n == 0) {
    fail(ErrorKind::kConfig, key + " needs a square number of entries");
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
  }
  return m;
}

std::string effect_mode_name(causal::EffectMode m) {
  return m == causal::EffectMode::kRealizedVsCounterfactual ? "realized" : "predictive";
}

std::vector<std::string> prob_headers(const std::vector<double>& probs) {
  std::vector<std::string> out;
  for (double p : probs) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%02d", static_cast<int>(std::lround(p * 100)));
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

int Panel::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::kData, "unknown series '" + name + "'");
  return static_cast<int>(it - names.begin());
}

int Panel::row_of_time(long long t) const {
  const auto it = std::find(time.begin(), time.end(), t);
  if (it == time.end()) {
    fail(ErrorKind::kData, "time " + std::to_string(t) + " is not in the dataset");
  }
  return static_cast<int>(it - time.begin());
}

Panel parse_dataset(std::istream& in, const std::string& source, bool log_transform) {
  Panel panel;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const auto where = source + ":" + std::to_string(line_no);
    if (!have_header) {
      if (cells.size() < 2 || cells[0] != "time") {
        fail(ErrorKind::kData, where + ": header must be 'time,<series>,...'");
      }
      std::set<std::string> unique;
      for (std::size_t j = 1; j < cells.size(); ++j) {
        if (cells[j].empty()) fail(ErrorKind::kData, where + ": empty series name");
        if (!unique.insert(cells[j]).second) {
          fail(ErrorKind::kData, where + ": duplicate series name '" + cells[j] + "'");
        }
        panel.names.push_back(cells[j]);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != panel.names.size() + 1) {
      fail(ErrorKind::kData, where + ": expected " +
                                 std::to_string(panel.names.size() + 1) +
                                 " cells, found " + std::to_string(cells.size()));
    }
    long long t = 0;
    if (!parse_integer(cells[0], &t)) {
      fail(ErrorKind::kData, where + ": time '" + cells[0] + "' is not an integer");
    }
    if (!panel.time.empty() && t <= panel.time.back()) {
      fail(ErrorKind::kData, where + ": time " + cells[0] + " is not increasing");
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double x = 0.0;
      if (cells[j].empty()) {
        fail(ErrorKind::kData, where + ": missing value for series '" +
                                   panel.names[j - 1] + "' (row time " + cells[0] + ")");
      }
      if (!parse_number(cells[j], &x)) {
        fail(ErrorKind::kData, where + ": '" + cells[j] + "' is not a finite number");
      }
      if (log_transform) {
        if (!(x > 0.0)) {
          fail(ErrorKind::kData, where + ": log transform needs positive values");
        }
        x = std::log(x);
      }
      row.push_back(x);
    }
    panel.time.push_back(t);
    rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorKind::kData, source + ": empty dataset");
  if (rows.empty()) fail(ErrorKind::kData, source + ": no data rows");
  panel.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(panel.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return panel;
}

Panel load_dataset(const std::string& path, bool log_transform) {
  auto in = open_input(path);
  return parse_dataset(in, path, log_transform);
}

void write_dataset(const std::string& path, const Panel& panel) {
  std::ostringstream out;
  out << "time";
  for (const auto& n : panel.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
    out << panel.time[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
      out << ',' << format_double(panel.values(i, j));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

UnitPanel load_unit_panel(const std::string& path) {
  auto in = open_input(path);
  UnitPanel panel;
  std::string line;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const auto where = path + ":" + std::to_string(line_no);
    if (panel.times.empty()) {
      if (cells.size() < 2 || cells[0] != "unit") {
        fail(ErrorKind::kData, where + ": header must be 'unit,<time>,...'");
      }
      panel.times.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != panel.times.size() + 1) {
      fail(ErrorKind::kData, where + ": wrong number of cells");
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double x = 0.0;
      if (!parse_number(cells[j], &x)) {
        fail(ErrorKind::kData, where + ": '" + cells[j] + "' is not a finite number");
      }
      row.push_back(x);
    }
    panel.units.push_back(cells[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::kData, path + ": no units");
  panel.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(panel.times.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return panel;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------

mvdlm::ModelSpec RunConfig::model_spec(int q) const {
  mvdlm::ModelSpec spec;
  if (F.size() > 0) {
    spec.F = F;
  } else {
    spec.F = Vector::Zero(p);
    spec.F(0) = 1.0;
  }
  if (G.size() > 0) {
    spec.G = G;
  } else if (spec.F.size() == 2) {
    spec.G.resize(2, 2);
    spec.G << 1.0, r, 0.0, r;
  } else {
    fail(ErrorKind::kConfig, "model.G is required unless p = 2");
  }
  spec.delta = delta;
  spec.beta = beta;
  spec.q = q;
  spec.validate();
  return spec;
}

namespace {

std::string json_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return format_double(v.get<double>());
  fail(ErrorKind::kConfig, "unsupported JSON value " + v.dump());
}

// Arrays (and arrays of rows) become comma-separated lists, row-major.
void flatten(const json& v, std::vector<std::string>* out) {
  if (v.is_array()) {
    for (const auto& x : v) flatten(x, out);
  } else {
    out->push_back(json_scalar(v));
  }
}

// A manifest or a bare config object, mapped onto the INI key layout.
boost::property_tree::ptree tree_from_json(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kConfig, source + ": " + e.what());
  }
  if (j.contains("config")) j = j["config"];
  if (!j.is_object()) fail(ErrorKind::kConfig, source + ": expected a JSON object");
  boost::property_tree::ptree tree;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) {
      fail(ErrorKind::kConfig, source + ": '" + section + "' must be an object");
    }
    boost::property_tree::ptree child;
    for (const auto& [key, value] : body.items()) {
      if (value.is_null()) continue;
      std::vector<std::string> parts;
      flatten(value, &parts);
      std::string joined;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        joined += (i ? "," : "") + parts[i];
      }
      child.put(boost::property_tree::ptree::path_type(key, '\0'), joined);
    }
    tree.add_child(boost::property_tree::ptree::path_type(section, '\0'), child);
  }
  return tree;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  in >> std::ws;
  if (in.peek() == '{') {
    tree = tree_from_json(in, source);
  } else {
    try {
      boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::kConfig, source + ": " + e.message() + " (line " +
                                   std::to_string(e.line()) + ")");
    }
  }
  RunConfig cfg;
  ConfigReader rd(tree, source);

  rd.integer("model.p", &cfg.p);
  rd.real("model.r", &cfg.r);
  if (auto v = rd.numbers("model.F"); v && !v->empty()) cfg.F = to_vector(*v);
  if (auto v = rd.numbers("model.G"); v && !v->empty()) cfg.G = to_square(*v, "model.G");
  rd.real("model.delta", &cfg.delta);
  rd.real("model.beta", &cfg.beta);
  if (auto v = rd.raw("model.dof_policy")) {
    if (*v == "experimental") {
      cfg.dof_policy = comp::ConditionalDofPolicy::kExperimental;
    } else if (*v == "full") {
      cfg.dof_policy = comp::ConditionalDofPolicy::kFullQ;
    } else {
      rd.bad("model.dof_policy", *v, "'experimental' or 'full'");
    }
  }

  rd.names("partition.controls", &cfg.controls);
  rd.names("partition.experimental", &cfg.experimental);

  if (auto v = rd.raw("causal.T")) {
    long long t = 0;
    if (!parse_integer(*v, &t)) rd.bad("causal.T", *v, "an integer time");
    cfg.T = t;
  }
  rd.real("causal.oam_delta", &cfg.oam_delta);
  rd.real("causal.oam_beta", &cfg.oam_beta);
  if (auto v = rd.raw("causal.effect_mode")) {
    if (*v == "realized") {
      cfg.effect_mode = causal::EffectMode::kRealizedVsCounterfactual;
    } else if (*v == "predictive") {
      cfg.effect_mode = causal::EffectMode::kPredictiveVsPredictive;
    } else {
      rd.bad("causal.effect_mode", *v, "'realized' or 'predictive'");
    }
  }
  rd.boolean("causal.log_scale", &cfg.log_scale);
  rd.integer("causal.nsamples", &cfg.nsamples);
  rd.integer("causal.seed", &cfg.seed);
  rd.integer("causal.lookahead", &cfg.lookahead);

  rd.real("init.C0_scale", &cfg.init.c0_scale);
  rd.real("init.n0", &cfg.init.n0);
  rd.real("init.D0_scale", &cfg.init.d0_scale);
  rd.integer("init.warmup", &cfg.warmup);
  if (auto v = rd.raw("init.start")) {
    if (*v == "prior") {
      cfg.init_kind = mvdlm::InitKind::kPrior;
    } else if (*v == "posterior") {
      cfg.init_kind = mvdlm::InitKind::kPosterior;
    } else {
      rd.bad("init.start", *v, "'prior' or 'posterior'");
    }
  }

  auto& sim = cfg.sim;
  rd.integer("simulate.q", &sim.q);
  rd.integer("simulate.qc", &sim.qc);
  rd.real("simulate.r", &sim.r);
  rd.integer("simulate.T_total", &sim.T_total);
  rd.integer("simulate.T_intervention", &sim.T_intervention);
  rd.real("simulate.iw_dof", &sim.sigma_prior.n);
  if (auto v = rd.numbers("simulate.R")) sim.sigma_prior.D = to_square(*v, "simulate.R");
  if (auto v = rd.numbers("simulate.W")) {
    // One number c means c I; four numbers are the 2 x 2 matrix, row-major.
    if (v->size() == 1) {
      sim.W = (*v)[0] * Matrix::Identity(2, 2);
    } else if (v->size() == 4) {
      sim.W = to_square(*v, "simulate.W");
    } else {
      fail(ErrorKind::kConfig, "simulate.W takes 1 or 4 numbers");
    }
  }
  if (auto v = rd.numbers("simulate.shock")) sim.shock = to_vector(*v);
  if (auto v = rd.numbers("simulate.level")) sim.initial_level = to_vector(*v);
  if (auto v = rd.numbers("simulate.growth")) sim.initial_growth = to_vector(*v);
  rd.integer("simulate.seed", &sim.seed);
  rd.names("simulate.names", &cfg.sim_names);

  rd.reject_unknown();

  if (cfg.p < 1) fail(ErrorKind::kConfig, "model.p must be >= 1");
  if (cfg.nsamples < 1) fail(ErrorKind::kConfig, "causal.nsamples must be >= 1");
  if (cfg.warmup < 0) fail(ErrorKind::kConfig, "init.warmup must be >= 0");
  if (cfg.lookahead < 0) fail(ErrorKind::kConfig, "causal.lookahead must be >= 0");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  auto in = open_input(path);
  return parse_config(in, path);
}

std::string config_json(const RunConfig& cfg) {
  json j;
  j["model"] = {{"p", cfg.p},
                {"r", cfg.r},
                {"F", vector_json(cfg.F)},
                {"G", matrix_json(cfg.G)},
                {"delta", cfg.delta},
                {"beta", cfg.beta},
                {"dof_policy", cfg.dof_policy == comp::ConditionalDofPolicy::kExperimental
                                   ? "experimental"
                                   : "full"}};
  j["partition"] = {{"controls", cfg.controls}, {"experimental", cfg.experimental}};
  j["causal"] = {{"T", cfg.T ? json(*cfg.T) : json(nullptr)},
                 {"oam_delta", cfg.oam_delta},
                 {"oam_beta", cfg.oam_beta},
                 {"effect_mode", effect_mode_name(cfg.effect_mode)},
                 {"log_scale", cfg.log_scale},
                 {"nsamples", cfg.nsamples},
                 {"seed", cfg.seed},
                 {"lookahead", cfg.lookahead}};
  j["init"] = {{"C0_scale", cfg.init.c0_scale},
               {"n0", cfg.init.n0},
               {"D0_scale", cfg.init.d0_scale},
               {"warmup", cfg.warmup},
               {"start", cfg.init_kind == mvdlm::InitKind::kPrior ? "prior" : "posterior"}};
  j["simulate"] = {{"q", cfg.sim.q},
                   {"qc", cfg.sim.qc},
                   {"r", cfg.sim.r},
                   {"T_total", cfg.sim.T_total},
                   {"T_intervention", cfg.sim.T_intervention},
                   {"iw_dof", cfg.sim.sigma_prior.n},
                   {"R", matrix_json(cfg.sim.sigma_prior.D)},
                   {"W", matrix_json(cfg.sim.W)},
                   {"shock", vector_json(cfg.sim.shock)},
                   {"level", vector_json(cfg.sim.initial_level)},
                   {"growth", vector_json(cfg.sim.initial_growth)},
                   {"seed", cfg.sim.seed},
                   {"names", cfg.sim_names}};
  return j.dump(2);
}

void write_quantile_table(const std::string& path,
                          const std::vector<long long>& times,
                          const std::vector<std::string>& series,
                          const std::vector<causal::Ensemble>& ensembles,
                          bool exponentiate) {
  if (times.size() != ensembles.size()) {
    fail(ErrorKind::kInput, "quantile table: times and ensembles differ in length");
  }
  const auto probs = causal::default_probs();
  std::ostringstream out;
  out << "time,series";
  for (const auto& h : prob_headers(probs)) out << ',' << h;
  out << '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (ensembles[i].cols() != static_cast<Eigen::Index>(series.size())) {
      fail(ErrorKind::kInput, "quantile table: series names do not match the ensemble");
    }
    const auto summary = causal::summarize(ensembles[i], probs);
    for (std::size_t s = 0; s < series.size(); ++s) {
      out << times[i] << ',' << series[s];
      for (Eigen::Index j = 0; j < summary.values.cols(); ++j) {
        double v = summary.values(static_cast<Eigen::Index>(s), j);
        if (exponentiate) v = std::exp(v);
        out << ',' << format_double(v);
      }
      out << '\n';
    }
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------

PreparedAnalysis prepare_analysis(const RunConfig& cfg, const Matrix& data,
                                  int qc, int T_row) {
  const int q = static_cast<int>(data.cols());
  if (cfg.warmup + 1 >= T_row) {
    fail(ErrorKind::kConfig, "the warm-up window must end before the intervention");
  }
  Vector level = Vector::Zero(q);
  if (cfg.warmup > 0) level = data.topRows(cfg.warmup).colwise().mean().transpose();

  const mvdlm::ModelSpec base = cfg.model_spec(q);
  PreparedAnalysis out;
  auto& spec = out.spec;
  spec.comp = comp::CompSpec::matched(base, qc);
  spec.comp.dof_policy = cfg.dof_policy;
  spec.T = T_row;
  spec.oam_delta = cfg.oam_delta;
  spec.oam_beta = cfg.oam_beta;
  spec.effect_mode = cfg.effect_mode;
  spec.log_scale = cfg.log_scale;
  spec.nsamples = cfg.nsamples;
  spec.first_row = cfg.warmup + 1;
  spec.init_kind = cfg.init_kind;
  spec.validate(static_cast<int>(data.rows()));
  out.init = comp::from_niw(mvdlm::initial_state(level, base.p(), cfg.init), qc);
  return out;
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  const auto& sim = cfg.sim;
  if (static_cast<int>(cfg.sim_names.size()) != sim.q) {
    fail(ErrorKind::kConfig, "simulate.names needs q entries");
  }
  const auto result = datagen::simulate(sim);
  ensure_dir(out_dir);

  Panel observed;
  observed.names = cfg.sim_names;
  observed.values = result.observed;
  for (int t = 1; t <= sim.T_total; ++t) observed.time.push_back(t);
  write_dataset(join_path(out_dir, "observed.csv"), observed);

  Panel cf;
  cf.names.assign(cfg.sim_names.begin() + sim.qc, cfg.sim_names.end());
  cf.values = result.counterfactual;
  cf.time = observed.time;
  write_dataset(join_path(out_dir, "counterfactual.csv"), cf);

  json truth;
  truth["seed"] = sim.seed;
  truth["names"] = cfg.sim_names;
  truth["controls"] = std::vector<std::string>(cfg.sim_names.begin(),
                                               cfg.sim_names.begin() + sim.qc);
  truth["T_intervention"] = sim.T_intervention;
  truth["T_total"] = sim.T_total;
  truth["r"] = sim.r;
  truth["sigma"] = matrix_json(result.sigma);
  truth["sigma_correlation"] = matrix_json(result.correlation);
  truth["R"] = matrix_json(sim.sigma_prior.D);
  truth["iw_dof"] = sim.sigma_prior.n;
  truth["W"] = matrix_json(sim.W);
  truth["shock_scale"] = vector_json(sim.shock);
  truth["shock_draw"] = matrix_json(result.shock_draw);
  write_text(join_path(out_dir, "truth.json"), truth.dump(2) + "\n");
}

void cmd_causal(const RunConfig& cfg, const std::string& config_path,
                const std::string& data_path, const std::string& out_dir) {
  if (cfg.controls.empty() || cfg.experimental.empty()) {
    fail(ErrorKind::kConfig,
         "partition.controls and partition.experimental must both be set");
  }
  if (!cfg.T) fail(ErrorKind::kConfig, "causal.T is required");
  const Panel panel = load_dataset(data_path, cfg.log_scale);

  std::vector<std::string> order = cfg.controls;
  order.insert(order.end(), cfg.experimental.begin(), cfg.experimental.end());
  if (std::set<std::string>(order.begin(), order.end()).size() != order.size()) {
    fail(ErrorKind::kConfig, "a series appears twice in the partition");
  }
  const int qc = static_cast<int>(cfg.controls.size());
  const int q = static_cast<int>(order.size());
  const int qe = q - qc;
  Matrix data(panel.values.rows(), q);
  for (int j = 0; j < q; ++j) data.col(j) = panel.values.col(panel.index_of(order[j]));

  const int rows = static_cast<int>(data.rows());
  const int T_row = panel.row_of_time(*cfg.T) + 1;
  const auto [spec, init] = prepare_analysis(cfg, data, qc, T_row);
  const Rng rng(cfg.seed);
  const auto run = causal::run_causal(spec, data, init, rng);

  std::vector<long long> post_times;
  for (int t : run.post_times) post_times.push_back(panel.time[static_cast<std::size_t>(t - 1)]);
  const std::vector<std::string> exp_names = cfg.experimental;

  ensure_dir(out_dir);
  std::vector<std::string> files;
  auto table = [&](const std::string& name, const std::vector<long long>& times,
                   const std::vector<std::string>& series,
                   const std::vector<causal::Ensemble>& ens, bool exponentiate) {
    write_quantile_table(join_path(out_dir, name), times, series, ens, exponentiate);
    files.push_back(name);
  };
  // Forecast tables are reported on the original scale.
  table("counterfactual.csv", post_times, exp_names, run.forecast_e0, cfg.log_scale);
  table("oam.csv", post_times, exp_names, run.forecast_e1, cfg.log_scale);
  table("effect.csv", post_times, exp_names, run.effects, false);
  table("filtered_counterfactual.csv", post_times, exp_names, run.filtered_e0, cfg.log_scale);
  table("filtered_effect.csv", post_times, exp_names, run.filtered_effects, false);
  if (cfg.log_scale) {
    std::vector<causal::Ensemble> lift, filtered_lift;
    for (const auto& e : run.effects) lift.push_back(causal::lift_transform(e, true));
    for (const auto& e : run.filtered_effects) {
      filtered_lift.push_back(causal::lift_transform(e, true));
    }
    table("lift.csv", post_times, exp_names, lift, false);
    table("filtered_lift.csv", post_times, exp_names, filtered_lift, false);
  }

  // Multi-step look-ahead from the last pre-intervention time.
  const int origin = T_row - 1;
  const int available = rows - origin;
  const int k = cfg.lookahead > 0 ? std::min(cfg.lookahead, available) : available;
  std::optional<Matrix> realized;
  if (spec.effect_mode == causal::EffectMode::kRealizedVsCounterfactual) {
    realized = Matrix(data.block(origin, qc, k, qe));
  }
  Rng look_rng = rng.split(0xffffffffULL);
  const auto look = causal::lookahead_effect(run.e0_state_post(origin),
                                             run.e1_state_post(origin), spec, origin,
                                             k, cfg.nsamples, look_rng, realized);
  std::vector<long long> look_times;
  for (int h = 1; h <= k; ++h) look_times.push_back(panel.time[static_cast<std::size_t>(origin + h - 1)]);
  table("lookahead_counterfactual.csv", look_times, order, look.e0, cfg.log_scale);
  table("lookahead_oam.csv", look_times, order, look.e1, cfg.log_scale);
  table("lookahead_effect.csv", look_times, exp_names, look.effect, false);

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "causal";
  manifest["config_path"] = config_path;
  manifest["data_path"] = data_path;
  manifest["seed"] = cfg.seed;
  manifest["series_order"] = order;
  manifest["intervention_time"] = *cfg.T;
  manifest["first_filtered_time"] = panel.time[static_cast<std::size_t>(spec.first_row - 1)];
  manifest["lookahead_origin_time"] = panel.time[static_cast<std::size_t>(origin - 1)];
  manifest["outputs"] = files;
  manifest["config"] = json::parse(config_json(cfg));
  write_text(join_path(out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

void cmd_filter(const RunConfig& cfg, const std::string& data_path,
                const std::string& out_dir) {
  const Panel panel = load_dataset(data_path, cfg.log_scale);
  std::vector<std::string> order = cfg.controls;
  order.insert(order.end(), cfg.experimental.begin(), cfg.experimental.end());
  if (order.empty()) order = panel.names;
  const int q = static_cast<int>(order.size());
  Matrix data(panel.values.rows(), q);
  for (int j = 0; j < q; ++j) data.col(j) = panel.values.col(panel.index_of(order[j]));
  if (cfg.warmup >= data.rows()) {
    fail(ErrorKind::kConfig, "the warm-up window covers the whole dataset");
  }
  Vector level = Vector::Zero(q);
  if (cfg.warmup > 0) level = data.topRows(cfg.warmup).colwise().mean().transpose();
  const mvdlm::ModelSpec spec = cfg.model_spec(q);
  mvdlm::FilterOptions options;
  options.init_kind = cfg.init_kind;
  options.first_time = cfg.warmup + 1;
  const auto steps = mvdlm::filter_run(spec, mvdlm::initial_state(level, spec.p(), cfg.init),
                                       data.bottomRows(data.rows() - cfg.warmup), options);

  const auto probs = causal::default_probs();
  std::ostringstream out;
  out << "time,series,y,f,scale,dof";
  for (const auto& h : prob_headers(probs)) out << ',' << h;
  out << ",level,growth\n";
  for (const auto& step : steps) {
    const boost::math::students_t dist(step.forecast.dof);
    const auto row = static_cast<Eigen::Index>(step.t - 1);
    for (int j = 0; j < q; ++j) {
      const double f = step.forecast.f(j);
      const double scale = std::sqrt(step.forecast.qscale * step.forecast.S(j, j));
      out << panel.time[static_cast<std::size_t>(row)] << ',' << order[j] << ','
          << format_double(data(row, j)) << ',' << format_double(f) << ','
          << format_double(scale) << ',' << format_double(step.forecast.dof);
      for (double p : probs) {
        out << ',' << format_double(f + scale * boost::math::quantile(dist, p));
      }
      out << ',' << format_double(step.posterior.M(0, j)) << ','
          << format_double(step.posterior.p() > 1 ? step.posterior.M(1, j) : 0.0) << '\n';
    }
  }
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "filter.csv"), out.str());

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "filter";
  manifest["data_path"] = data_path;
  manifest["series_order"] = order;
  manifest["outputs"] = {"filter.csv"};
  manifest["config"] = json::parse(config_json(cfg));
  write_text(join_path(out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

void cmd_stratify(const std::string& panel_path, int factor, int columns,
                  const std::string& out_path, const std::string& means_path) {
  const UnitPanel panel = load_unit_panel(panel_path);
  if (columns < 0 || columns > panel.values.cols()) {
    fail(ErrorKind::kConfig, "--columns is out of range for the panel");
  }
  const Matrix used = columns == 0 ? panel.values : Matrix(panel.values.leftCols(columns));
  const auto strat = datagen::svd_stratify(used, factor);
  std::ostringstream out;
  out << "unit,label,loading\n";
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < panel.units.size(); ++i) {
    labels.push_back(datagen::to_string(strat.labels[i]));
    out << panel.units[i] << ',' << labels.back() << ','
        << format_double(strat.loadings(static_cast<Eigen::Index>(i))) << '\n';
  }
  write_text(out_path, out.str());
  if (!means_path.empty()) {
    const std::vector<std::string> groups = {"Hi", "Lo"};
    const Matrix means = datagen::aggregate_groups(panel.values, labels, groups);
    std::ostringstream m;
    m << "time,Hi,Lo\n";
    for (Eigen::Index t = 0; t < means.cols(); ++t) {
      m << panel.times[static_cast<std::size_t>(t)] << ',' << format_double(means(0, t))
        << ',' << format_double(means(1, t)) << '\n';
    }
    write_text(means_path, m.str());
  }
}

}  // namespace cmvdlm::io
