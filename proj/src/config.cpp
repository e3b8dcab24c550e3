#include "sketchavg/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sketchavg/estimators.hpp"

namespace sketchavg {
namespace {

namespace pt = boost::property_tree;

constexpr std::array<std::pair<Algorithm, std::string_view>, 3> kAlgorithms{{
    {Algorithm::ihs, "ihs"},
    {Algorithm::ridge_average, "ridge-average"},
    {Algorithm::newton_sketch, "newton-sketch"},
}};

const std::map<std::string, std::set<std::string>> kKeys{
    {"problem",
     {"kind", "n", "d", "lambda1", "noise", "identical_sv", "sigma", "a_scale", "bound", "c_scale"}},
    {"cluster", {"q", "m", "m_list", "sketch", "s", "m2", "inner", "partitioned"}},
    {"solver",
     {"algorithm", "iterations", "eps", "mu", "correction", "lambda2", "step_policy", "alphas",
      "sigma_mode", "sigma", "alpha1", "line_search"}},
    {"output", {"trials", "seed", "dir", "svg", "threads"}},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

/// Drops '#' comments that are not inside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines)
      : tree_(tree), lines_(std::move(lines)) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const {
    std::string where = "[" + section + "] " + key;
    if (const auto it = lines_.find(section + "." + key); it != lines_.end()) {
      where = "line " + std::to_string(it->second) + ": " + where;
    }
    throw ConfigError("config " + where + ": " + message);
  }

  template <typename T>
  T parse_number(const std::string& section, const std::string& key, const std::string& text) const {
    T value{};
    const std::string s = trim(text);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      fail(section, key, std::string("expected ") +
                             (std::is_integral_v<T> ? "an integer" : "a number") + ", got '" + s + "'");
    }
    return value;
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, T& out) const {
    if (const auto v = raw(section, key)) out = parse_number<T>(section, key, *v);
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, std::optional<T>& out) const {
    if (const auto v = raw(section, key)) out = parse_number<T>(section, key, *v);
  }

  bool parse_bool(const std::string& section, const std::string& key, const std::string& text) const {
    if (text == "true") return true;
    if (text == "false") return false;
    fail(section, key, "expected true or false, got '" + text + "'");
  }

  void boolean(const std::string& section, const std::string& key, bool& out) const {
    if (const auto v = raw(section, key)) out = parse_bool(section, key, *v);
  }

  void boolean(const std::string& section, const std::string& key, std::optional<bool>& out) const {
    if (const auto v = raw(section, key)) out = parse_bool(section, key, *v);
  }

  void string(const std::string& section, const std::string& key, std::string& out) const {
    if (const auto v = raw(section, key)) out = unquote(*v);
  }

  /// A bracketed, comma-separated list; a bare scalar is a one-element list.
  std::optional<std::vector<std::string>> list(const std::string& section,
                                               const std::string& key) const {
    const auto v = raw(section, key);
    if (!v) return std::nullopt;
    std::string body = *v;
    if (!body.empty() && body.front() == '[') {
      if (body.back() != ']') fail(section, key, "unterminated list");
      body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    if (trim(body).empty()) return items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = unquote(item);
      if (item.empty()) fail(section, key, "empty list element");
      items.push_back(item);
    }
    return items;
  }

  template <typename T>
  void number_list(const std::string& section, const std::string& key, std::vector<T>& out) const {
    if (const auto items = list(section, key)) {
      out.clear();
      for (const auto& item : *items) out.push_back(parse_number<T>(section, key, item));
    }
  }

  template <typename T, typename Parse>
  void named(const std::string& section, const std::string& key, T& out, Parse parse,
             const char* choices) const {
    if (const auto v = raw(section, key)) out = named_value<T>(section, key, unquote(*v), parse, choices);
  }

  template <typename T, typename Parse>
  void named_list(const std::string& section, const std::string& key, std::vector<T>& out,
                  Parse parse, const char* choices) const {
    if (const auto items = list(section, key)) {
      out.clear();
      for (const auto& item : *items) out.push_back(named_value<T>(section, key, item, parse, choices));
    }
  }

  template <typename T, typename Parse>
  T named_value(const std::string& section, const std::string& key, const std::string& text,
                Parse parse, const char* choices) const {
    const auto v = parse(text);
    if (!v) fail(section, key, "unknown value '" + text + "' (expected one of " + choices + ")");
    return static_cast<T>(*v);
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
};

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  out.precision(17);
  out << '[';
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out << ", ";
    if constexpr (std::is_arithmetic_v<T>) {
      out << items[i];
    } else {
      out << '"' << to_string(items[i]) << '"';
    }
  }
  out << ']';
  return out.str();
}

std::string join_strings(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", \"" : "\"") + items[i] + "\"";
  return out + "]";
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

[[noreturn]] void invalid(const std::string& where, const std::string& message) {
  throw ConfigError("config " + where + ": " + message);
}

}  // namespace

std::string_view to_string(Algorithm a) {
  for (const auto& [k, n] : kAlgorithms)
    if (k == a) return n;
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& [k, n] : kAlgorithms)
    if (n == name) return k;
  return std::nullopt;
}

ExperimentConfig parse_config(std::string_view text) {
  // First pass: strip comments and remember where every key lives.
  std::istringstream in{std::string(text)};
  std::ostringstream cleaned;
  std::map<std::string, int> lines;
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(strip_comment(line));
    cleaned << body << '\n';
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("config line " + std::to_string(number) + ": malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!kKeys.contains(section)) {
        throw ConfigError("config line " + std::to_string(number) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(number) + ": key '" + key + "' outside any section");
    }
    if (!kKeys.at(section).contains(key)) {
      throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key +
                        "' in [" + section + "]");
    }
    lines[section + "." + key] = number;
  }

  pt::ptree tree;
  try {
    std::istringstream ini(cleaned.str());
    pt::ini_parser::read_ini(ini, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  const Reader r(tree, std::move(lines));
  ExperimentConfig c;
  auto& p = c.problem;
  r.named("problem", "kind", p.kind, parse_problem_kind, "lstsq, ridge, logistic, barrier");
  r.number("problem", "n", p.n);
  r.number("problem", "d", p.d);
  r.number("problem", "lambda1", p.lambda1);
  r.number("problem", "noise", p.noise);
  r.boolean("problem", "identical_sv", p.identical_sv);
  r.number("problem", "sigma", p.sigma);
  r.number("problem", "a_scale", p.a_scale);
  r.number("problem", "bound", p.bound);
  r.number("problem", "c_scale", p.c_scale);

  auto& cl = c.cluster;
  r.number_list("cluster", "q", cl.q);
  r.number("cluster", "m", cl.m);
  r.number_list("cluster", "m_list", cl.m_list);
  r.named_list("cluster", "sketch", cl.sketches, parse_sketch_kind,
               "gaussian, hadamard, uniform, sjlt, hybrid");
  r.number("cluster", "s", cl.s);
  r.number("cluster", "m2", cl.m2);
  r.named("cluster", "inner", cl.inner, parse_sketch_kind, "gaussian, sjlt");
  r.boolean("cluster", "partitioned", cl.partitioned);

  auto& s = c.solver;
  r.named("solver", "algorithm", s.algorithm, parse_algorithm, "ihs, ridge-average, newton-sketch");
  r.number("solver", "iterations", s.iterations);
  r.number("solver", "eps", s.eps);
  r.number("solver", "mu", s.mu);
  r.named_list("solver", "correction", s.corrections, parse_ridge_correction,
               "zero-bias, printed, vanilla");
  if (const auto items = r.list("solver", "lambda2")) {
    for (const auto& item : *items) {
      if (item != "corrected" && item != "vanilla") {
        r.fail("solver", "lambda2", "unknown value '" + item + "' (expected corrected or vanilla)");
      }
    }
    s.lambda2 = *items;
  }
  r.named_list("solver", "step_policy", s.policies, parse_step_policy,
               "unbiased, min-variance, fixed");
  r.number_list("solver", "alphas", s.alphas);
  if (const auto v = r.raw("solver", "sigma_mode")) {
    s.sigma_mode = r.named_value<SigmaMode>("solver", "sigma_mode", unquote(*v), parse_sigma_mode,
                                            "mean-sv, mean-diag, min-sv");
  }
  r.number("solver", "sigma", s.sigma);
  r.number("solver", "alpha1", s.alpha1);
  r.boolean("solver", "line_search", s.line_search);

  auto& o = c.output;
  r.number("output", "trials", o.trials);
  r.number("output", "seed", o.seed);
  r.string("output", "dir", o.dir);
  r.boolean("output", "svg", o.svg);
  r.number("output", "threads", o.threads);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& p = c.problem;
  out << "[problem]\n"
      << "kind = \"" << to_string(p.kind) << "\"\n"
      << "n = " << p.n << "\n"
      << "d = " << p.d << "\n"
      << "lambda1 = " << num(p.lambda1) << "\n"
      << "noise = " << num(p.noise) << "\n"
      << "identical_sv = " << (p.identical_sv ? "true" : "false") << "\n"
      << "sigma = " << num(p.sigma) << "\n"
      << "a_scale = " << num(p.a_scale) << "\n"
      << "bound = " << num(p.bound) << "\n"
      << "c_scale = " << num(p.c_scale) << "\n\n";
  const auto& cl = c.cluster;
  out << "[cluster]\n"
      << "q = " << join(cl.q) << "\n"
      << "m = " << cl.m << "\n"
      << "m_list = " << join(cl.m_list) << "\n"
      << "sketch = " << join(cl.sketches) << "\n"
      << "s = " << cl.s << "\n"
      << "m2 = " << cl.m2 << "\n"
      << "inner = \"" << to_string(cl.inner) << "\"\n"
      << "partitioned = " << (cl.partitioned ? "true" : "false") << "\n\n";
  const auto& s = c.solver;
  out << "[solver]\n"
      << "algorithm = \"" << to_string(s.algorithm) << "\"\n"
      << "iterations = " << s.iterations << "\n"
      << "eps = " << num(s.eps) << "\n";
  if (s.mu) out << "mu = " << num(*s.mu) << "\n";
  out << "correction = " << join(s.corrections) << "\n"
      << "lambda2 = " << join_strings(s.lambda2) << "\n"
      << "step_policy = " << join(s.policies) << "\n"
      << "alphas = " << join(s.alphas) << "\n";
  if (s.sigma_mode) out << "sigma_mode = \"" << to_string(*s.sigma_mode) << "\"\n";
  if (s.sigma) out << "sigma = " << num(*s.sigma) << "\n";
  if (s.alpha1) out << "alpha1 = " << num(*s.alpha1) << "\n";
  if (s.line_search) out << "line_search = " << (*s.line_search ? "true" : "false") << "\n";
  const auto& o = c.output;
  out << "\n[output]\n"
      << "trials = " << o.trials << "\n"
      << "seed = " << o.seed << "\n"
      << "dir = \"" << o.dir << "\"\n"
      << "svg = " << (o.svg ? "true" : "false") << "\n"
      << "threads = " << o.threads << "\n";
  return out.str();
}

void validate(const ExperimentConfig& c) {
  const auto& p = c.problem;
  const auto& cl = c.cluster;
  const auto& s = c.solver;
  if (p.d < 1) invalid("[problem] d", "must be >= 1");
  if (p.n < p.d) invalid("[problem] n", "must be >= d");
  if (!(p.lambda1 >= 0.0)) invalid("[problem] lambda1", "must be >= 0");
  if (!(p.noise >= 0.0)) invalid("[problem] noise", "must be >= 0");
  if (p.identical_sv && !(p.sigma > 0.0)) invalid("[problem] sigma", "must be > 0");
  if (p.kind == ProblemKind::barrier && !(p.bound > 0.0)) invalid("[problem] bound", "must be > 0");
  if (c.output.trials < 1) invalid("[output] trials", "must be >= 1");
  if (s.iterations < 0) invalid("[solver] iterations", "must be >= 0");
  if (s.eps < 0.0) invalid("[solver] eps", "must be >= 0");
  if (cl.sketches.empty()) invalid("[cluster] sketch", "needs at least one sketch kind");

  switch (s.algorithm) {
    case Algorithm::ihs:
      if (p.kind != ProblemKind::lstsq && p.kind != ProblemKind::ridge) {
        invalid("[solver] algorithm", "ihs needs a lstsq or ridge problem");
      }
      break;
    case Algorithm::ridge_average:
      if (p.kind != ProblemKind::ridge) invalid("[solver] algorithm", "ridge-average needs a ridge problem");
      if (s.corrections.empty()) invalid("[solver] correction", "needs at least one mode");
      break;
    case Algorithm::newton_sketch:
      if (s.lambda2.empty() || (s.policies.empty() && s.alphas.empty())) {
        invalid("[solver] step_policy", "needs at least one step policy or alpha");
      }
      break;
  }

  std::vector<std::vector<std::int64_t>> layouts;
  if (!cl.m_list.empty()) {
    layouts.push_back(cl.m_list);
  } else {
    if (cl.q.empty()) invalid("[cluster] q", "needs at least one worker count");
    if (cl.m < 1) invalid("[cluster] m", "must be >= 1 (or give m_list)");
    for (const auto q : cl.q) {
      if (q < 1) invalid("[cluster] q", "worker counts must be >= 1");
      layouts.emplace_back(static_cast<std::size_t>(q), cl.m);
    }
  }

  // Rows of the matrix each worker sketches.
  const std::int64_t rows = p.kind == ProblemKind::barrier && s.algorithm == Algorithm::newton_sketch
                                ? 2 * p.n
                                : p.n;
  for (const auto& layout : layouts) {
    for (const auto kind : cl.sketches) {
      for (const auto m : layout) {
        SketchSpec spec{kind, m, cl.s, cl.m2, cl.inner};
        try {
          validate(spec, rows);
        } catch (const ShapeError& e) {
          invalid("[cluster]", e.what());
        }
      }
    }
    if (s.algorithm == Algorithm::ihs && !s.mu) {
      for (const auto m : layout) theta1(m, p.d);
    }
    if (s.algorithm == Algorithm::ridge_average) {
      const bool zero_bias = std::find(s.corrections.begin(), s.corrections.end(),
                                       RidgeCorrection::zero_bias) != s.corrections.end();
      const std::optional<double> sigma = s.sigma ? s.sigma : (p.identical_sv ? std::optional(p.sigma) : std::nullopt);
      if (zero_bias && sigma) per_worker_corrections(p.lambda1, p.d, layout, *sigma, Regime::ridge);
    }
    if (s.algorithm == Algorithm::newton_sketch && (p.kind == ProblemKind::lstsq || p.lambda1 == 0.0)) {
      for (const auto policy : s.policies) {
        for (const auto m : layout) {
          if (policy == StepPolicy::unbiased) theta1(m, p.d);
          if (policy == StepPolicy::min_variance) step_scalings(m, p.d);
        }
      }
    }
  }
}

}  // namespace sketchavg
