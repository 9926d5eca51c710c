#include "ineqlab/suite.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "ineqlab/battery.hpp"
#include "ineqlab/expression.hpp"
#include "ineqlab/generator.hpp"
#include "ineqlab/lyapunov.hpp"
#include "ineqlab/transport.hpp"

namespace ineqlab {

using nlohmann::json;

const std::vector<std::string>& suite_ids() {
  static const std::vector<std::string> ids{"thm1",  "thm1.converse", "interp", "lemma1",   "decay",
                                            "prop1", "transport_ineq", "thm2",  "lyapunov", "lsi"};
  return ids;
}

// ---------------------------------------------------------------- config

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(fmt::format("field {}: {}", path_, what)); }

  void require_object(std::initializer_list<std::string_view> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, value] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError(fmt::format("field {}.{}: unknown field", path_, key));
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  Reader at(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(fmt::format("field {}.{}: missing", path_, key));
    return Reader(j_.at(key), path_ + "." + key);
  }
  Reader at(std::size_t i) const { return Reader(j_.at(i), fmt::format("{}[{}]", path_, i)); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned()) fail("expected a nonnegative integer");
    return j_.get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  std::vector<double> numbers() const {
    std::vector<double> out(array_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

ModelSpec read_model(const Reader& r) {
  r.require_object({"name", "potential", "domain", "n", "constants", "bounded", "lyapunov"});
  ModelSpec m;
  m.potential = r.at("potential").string();
  m.name = r.has("name") ? r.at("name").string() : m.potential;
  try {
    (void)named_potential(m.potential);
  } catch (const ParseError& e) {
    r.at("potential").fail(e.what());
  }
  const std::vector<double> dom = r.at("domain").numbers();
  if (dom.size() != 2 || !(dom[1] > dom[0])) r.at("domain").fail("expected [lo, hi] with lo < hi");
  m.domain = {dom[0], dom[1]};
  m.n = static_cast<std::size_t>(r.at("n").unsigned_integer());
  if (m.n < 5) r.at("n").fail("need at least 5 nodes");
  if (m.potential == "ou") {
    // Standard Gaussian: both constants are 1.
    m.c_ls = 1.0;
    m.c_t = 1.0;
  }
  if (r.has("constants")) {
    const Reader c = r.at("constants");
    c.require_object({"C_LS", "C_T"});
    if (c.has("C_LS")) m.c_ls = c.at("C_LS").number();
    if (c.has("C_T")) m.c_t = c.at("C_T").number();
    if (m.c_ls && !(*m.c_ls > 0.0)) c.at("C_LS").fail("must be > 0");
    if (m.c_t && !(*m.c_t > 0.0)) c.at("C_T").fail("must be > 0");
  }
  if (r.has("bounded")) m.bounded = r.at("bounded").boolean();
  if (r.has("lyapunov")) {
    const Reader l = r.at("lyapunov");
    l.require_object({"W", "c", "b", "x0", "C4"});
    LyapunovSpec s;
    s.w = l.at("W").string();
    try {
      (void)Expression::parse(s.w);
    } catch (const ParseError& e) {
      l.at("W").fail(e.what());
    }
    s.c = l.at("c").number();
    s.b = l.at("b").number();
    if (l.has("x0")) s.x0 = l.at("x0").number();
    if (l.has("C4")) s.c4 = l.at("C4").number();
    if (!(s.c > 0.0)) l.at("c").fail("must be > 0");
    if (!(s.b >= 0.0)) l.at("b").fail("must be >= 0");
    if (!(s.c4 >= 0.0)) l.at("C4").fail("must be >= 0");
    m.lyapunov = s;
  }
  return m;
}

DensityFamilySpec read_densities(const Reader& r) {
  r.require_object({"tilts", "mixtures", "random", "constant"});
  DensityFamilySpec d;
  if (r.has("tilts")) d.tilts = r.at("tilts").numbers();
  if (r.has("mixtures")) {
    const Reader mixes = r.at("mixtures");
    d.mixtures.assign(mixes.array_size(), {});
    for (std::size_t i = 0; i < d.mixtures.size(); ++i) {
      const Reader m = mixes.at(i);
      m.require_object({"a", "w"});
      d.mixtures[i] = {m.at("a").number(), m.at("w").number()};
      if (!(d.mixtures[i].w >= 0.0 && d.mixtures[i].w <= 1.0)) m.at("w").fail("must lie in [0, 1]");
    }
  }
  if (r.has("random")) {
    const Reader rnd = r.at("random");
    rnd.require_object({"count", "amplitude", "modes"});
    if (rnd.has("count")) d.random_count = static_cast<int>(rnd.at("count").unsigned_integer());
    if (rnd.has("amplitude")) d.random_amplitude = rnd.at("amplitude").number();
    if (rnd.has("modes")) d.random_modes = static_cast<int>(rnd.at("modes").unsigned_integer());
    if (d.random_modes < 1) rnd.at("modes").fail("must be >= 1");
  }
  if (r.has("constant")) d.include_constant = r.at("constant").boolean();
  return d;
}

std::vector<double> read_times(const Reader& r) {
  std::vector<double> t = r.numbers();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || (i > 0 && !(t[i] > t[i - 1]))) r.fail("times must be positive and increasing");
  }
  return t;
}

}  // namespace

SuiteConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
    throw ConfigError(fmt::format("line {}: {}", line, e.what()));
  }
  const Reader root(j, "$");
  root.require_object({"seed", "models", "densities", "suites", "tolerances", "times", "derivative_times",
                       "transport", "output"});
  SuiteConfig c;
  if (root.has("seed")) c.seed = root.at("seed").unsigned_integer();

  const Reader models = root.at("models");
  for (std::size_t i = 0; i < models.array_size(); ++i) c.models.push_back(read_model(models.at(i)));
  if (c.models.empty()) models.fail("at least one model is required");

  if (root.has("densities")) c.densities = read_densities(root.at("densities"));

  const Reader suites = root.at("suites");
  for (std::size_t i = 0; i < suites.array_size(); ++i) {
    std::string id = suites.at(i).string();
    const auto& known = suite_ids();
    if (std::find(known.begin(), known.end(), id) == known.end()) {
      suites.at(i).fail(fmt::format("unknown suite id \"{}\"", id));
    }
    c.suites.push_back(std::move(id));
  }

  if (root.has("tolerances")) {
    const Reader t = root.at("tolerances");
    t.require_object({"interp_step", "interp_tail", "derivative_dt", "derivative_floor"});
    if (t.has("interp_step")) c.tolerances.interp_step = t.at("interp_step").number();
    if (t.has("interp_tail")) c.tolerances.interp_tail = t.at("interp_tail").number();
    if (t.has("derivative_dt")) c.tolerances.derivative_dt = t.at("derivative_dt").number();
    if (t.has("derivative_floor")) c.tolerances.derivative_floor = t.at("derivative_floor").number();
  }
  if (root.has("times")) c.times = read_times(root.at("times"));
  if (root.has("derivative_times")) c.derivative_times = read_times(root.at("derivative_times"));
  if (root.has("transport")) {
    c.transport = root.at("transport").string();
    if (c.transport != "quantile" && c.transport != "lp") root.at("transport").fail("expected \"quantile\" or \"lp\"");
  }
  if (root.has("output")) c.output = root.at("output").string();
  return c;
}

SuiteConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ---------------------------------------------------------------- running

namespace {

W2Backend make_backend(const std::string& name) {
  if (name == "lp") {
    return [](const DensityRatio& f, const GridMeasure& mu) {
      return w2_lp(atomize(f, mu), atomize(DensityRatio::constant(mu), mu)).distance;
    };
  }
  return quantile_backend();
}

struct Model {
  Model(const ModelSpec& s, const SuiteConfig& config)
      : spec(s),
        mu(GridMeasure::build(named_potential(s.potential), s.domain, s.n)),
        L(GeneratorMatrix::from_measure(mu)),
        c_p(spectral_gap(L)),
        rho(curvature_lower_bound(mu)),
        family(density_family(config.densities, config.seed, mu)),
        backend(make_backend(config.transport)) {
    if (spec.c_ls) contraction = contraction_constants(rho, *spec.c_ls);
  }

  std::string context() const { return "model=" + spec.name; }
  std::string context(const LabeledDensity& d) const { return context() + ";f=" + d.label; }

  ModelSpec spec;
  GridMeasure mu;
  GeneratorMatrix L;
  double c_p;
  double rho;
  std::optional<ContractionConstants> contraction;
  std::vector<LabeledDensity> family;
  W2Backend backend;
  std::optional<LyapunovCheck> drift;
  std::optional<WeightedPoincareFit> fit;
};

struct Task {
  std::string label;
  std::function<std::vector<InequalityReport>()> run;
};

template <std::size_t N>
std::vector<InequalityReport> to_vector(std::array<InequalityReport, N> a) {
  return {std::make_move_iterator(a.begin()), std::make_move_iterator(a.end())};
}

void add_model_tasks(const std::shared_ptr<const Model>& m, const std::string& suite, const SuiteConfig& config,
                     std::vector<Task>& tasks) {
  const std::string mctx = m->context();

  if (suite == "thm1.converse") {
    tasks.push_back({mctx + ": thm1.converse", [m] {
                       std::vector<DensityRatio> fs;
                       std::vector<std::string> labels;
                       for (const auto& d : m->family) {
                         fs.push_back(d.f);
                         labels.push_back(d.label);
                       }
                       return check_thm1_converse(fs, labels, m->mu, m->backend, m->context());
                     }});
    return;
  }
  if (suite == "prop1") {
    tasks.push_back({mctx + ": prop1.constants", [m] {
                       if (!m->contraction) {
                         return std::vector<InequalityReport>{
                             skipped_report("prop1.constants", m->context(), "no C_LS supplied for this model")};
                       }
                       const ContractionConstants& k = *m->contraction;
                       return std::vector<InequalityReport>{make_report(
                           "prop1.constants", m->context(), 1.0, k.c, 0.0,
                           {{"rho", k.rho}, {"C_LS", k.c_ls}, {"T0", k.t0}, {"beta_T0", k.beta_t0},
                            {"gamma_T0", k.gamma_t0}, {"C", k.c}, {"kappa", k.kappa}})};
                     }});
  }
  if (suite == "lyapunov") {
    tasks.push_back({mctx + ": lyapunov", [m] {
                       std::vector<InequalityReport> out;
                       if (!m->drift) {
                         out.push_back(skipped_report("lyapunov.drift", m->context(), "no Lyapunov witness configured"));
                         return out;
                       }
                       InequalityReport drift = m->drift->report;
                       drift.context = m->context();
                       out.push_back(std::move(drift));
                       if (m->fit) {
                         const WeightedPoincareFit& fit = *m->fit;
                         InequalityReport r = make_report("lyapunov.fit", m->context(), fit.mean_d2, fit.c4, 0.0,
                                                          {{"C_3", fit.c3}, {"C_4", fit.c4}});
                         if (!fit.finite) {
                           r.verdict = Verdict::kFail;
                           r.note = fit.diagnostic;
                         }
                         out.push_back(std::move(r));
                       }
                       return out;
                     }});
  }
  if (suite == "lsi") {
    tasks.push_back({mctx + ": lsi.lower_bound", [m] {
                       const LsiEstimate e = lsi_constant(m->mu, LsiSearch::defaults(m->mu));
                       if (!m->spec.c_ls) {
                         return std::vector<InequalityReport>{skipped_report(
                             "lsi.lower_bound", m->context(),
                             fmt::format("no C_LS supplied; best lower bound {:.6g} from {}", e.lower_bound,
                                         e.witness_label))};
                       }
                       return std::vector<InequalityReport>{make_report(
                           "lsi.lower_bound", m->context(), e.lower_bound, *m->spec.c_ls, kAbsoluteTolerance,
                           {{"C_LS", *m->spec.c_ls}, {"members", static_cast<double>(e.members_evaluated)}})};
                     }});
  }

  for (std::size_t k = 0; k < m->family.size(); ++k) {
    const std::string ctx = m->context(m->family[k]);
    const std::string label = ctx + ": " + suite;
    const DensityRatio* f = &m->family[k].f;

    if (suite == "thm1") {
      tasks.push_back({label, [m, f, ctx] { return to_vector(check_thm1(*f, m->mu, m->c_p, m->backend, ctx)); }});
    } else if (suite == "interp") {
      InterpolationOptions opts;
      opts.step = config.tolerances.interp_step;
      opts.tail_tolerance = config.tolerances.interp_tail;
      tasks.push_back({label, [m, f, ctx, opts] {
                         return std::vector<InequalityReport>{
                             check_interpolation_bound(*f, m->mu, m->L, m->c_p, m->backend, opts, ctx)};
                       }});
    } else if (suite == "lemma1") {
      const Tolerances tol = config.tolerances;
      const std::vector<double> times = config.derivative_times;
      tasks.push_back({label, [m, f, ctx, tol, times] {
                         try {
                           return check_derivative_bound(*f, m->mu, m->L, m->backend, times, tol.derivative_dt,
                                                         tol.derivative_floor, ctx);
                         } catch (const InvalidInput& e) {
                           return std::vector<InequalityReport>{skipped_report("lemma1", ctx, e.what())};
                         }
                       }});
    } else if (suite == "decay") {
      std::vector<double> times{0.0};
      times.insert(times.end(), config.times.begin(), config.times.end());
      tasks.push_back({label, [m, f, ctx, times] {
                         const FlowTrace trace = flow_trace(m->L, m->mu, *f, times, m->backend);
                         return check_decay(trace, m->c_p, m->spec.c_ls, ctx);
                       }});
    } else if (suite == "prop1") {
      const std::vector<double> times = config.times;
      tasks.push_back({label, [m, f, ctx, times] {
                         if (!m->contraction) {
                           return std::vector<InequalityReport>{
                               skipped_report("prop1.contraction", ctx, "no C_LS supplied for this model")};
                         }
                         return check_contraction(*f, m->mu, m->L, m->backend, *m->contraction, times, ctx);
                       }});
    } else if (suite == "transport_ineq") {
      tasks.push_back({label, [m, f, ctx] {
                         TransportConstants tc{m->spec.c_t, m->rho, m->c_p, m->contraction};
                         return check_transport_inequalities(*f, m->mu, m->backend, tc, ctx);
                       }});
    } else if (suite == "thm2") {
      tasks.push_back({label, [m, f, ctx] {
                         return check_centralization(*f, m->mu, m->c_p, m->backend, m->spec.bounded, ctx);
                       }});
    } else if (suite == "lyapunov") {
      tasks.push_back({label, [m, f, ctx] {
                         const char* why = !m->drift                                 ? "no Lyapunov witness configured"
                                           : m->drift->report.verdict != Verdict::kPass ? "witness fails the drift condition"
                                           : !m->fit || !m->fit->finite              ? "weighted Poincare constant is infinite"
                                                                                     : nullptr;
                         if (why) return std::vector<InequalityReport>{skipped_report("lyapunov.w2i", ctx, why)};
                         return check_w2i_from_fit(*f, m->mu, m->L, *m->fit, m->c_p, m->backend, ctx);
                       }});
    } else if (suite == "lsi") {
      tasks.push_back({label, [m, f, ctx] {
                         if (!m->spec.c_ls) {
                           return std::vector<InequalityReport>{skipped_report("lsi", ctx, "no C_LS supplied")};
                         }
                         const FunctionalBundle b = functionals(*f, m->mu);
                         const double rhs = 0.5 * *m->spec.c_ls * b.fisher;
                         return std::vector<InequalityReport>{
                             make_report("lsi", ctx, b.entropy, rhs, kAbsoluteTolerance, {{"C_LS", *m->spec.c_ls}})};
                       }});
    }
  }
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& config, unsigned jobs) {
  SuiteResult result;
  std::vector<Task> tasks;
  const bool wants_lyapunov = std::find(config.suites.begin(), config.suites.end(), "lyapunov") != config.suites.end();

  for (const ModelSpec& spec : config.models) {
    std::shared_ptr<Model> m;
    try {
      m = std::make_shared<Model>(spec, config);
      if (wants_lyapunov && spec.lyapunov) {
        const LyapunovSpec& ls = *spec.lyapunov;
        const Expression w = Expression::parse(ls.w);
        LyapunovWitness witness{GridFunction{std::vector<double>(m->mu.size())}, ls.c, ls.b, ls.x0};
        for (std::size_t i = 0; i < m->mu.size(); ++i) witness.w.values[i] = w(m->mu.node(i));
        m->drift = check_lyapunov(witness, m->L, m->mu);
        if (m->drift->report.verdict == Verdict::kPass) m->fit = fit_weighted_poincare(m->mu, m->L, ls.x0, ls.c4);
      }
    } catch (const Error& e) {
      result.errors.push_back(fmt::format("model={}: {}", spec.name, e.what()));
      continue;
    }
    for (const std::string& suite : config.suites) add_model_tasks(m, suite, config, tasks);
  }

  std::vector<std::vector<InequalityReport>> outputs(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        outputs[i] = tasks[i].run();
      } catch (const std::exception& e) {
        errors[i] = tasks[i].label + ": " + e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (auto& r : outputs[i]) result.reports.push_back(std::move(r));
    if (!errors[i].empty()) result.errors.push_back(std::move(errors[i]));
  }
  std::stable_sort(result.reports.begin(), result.reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.id, a.context) < std::tie(b.id, b.context);
  });
  return result;
}

int exit_status(const SuiteResult& result) {
  if (!result.errors.empty()) return 1;
  for (const auto& r : result.reports) {
    if (r.verdict == Verdict::kFail) return 1;
  }
  return 0;
}

// ---------------------------------------------------------------- output

namespace {

std::string number(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : "null"; }

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string reports_json(const SuiteResult& result, const SuiteConfig& config) {
  std::string out = "{\n";
  out += fmt::format("  \"version\": {},\n", quoted(INEQLAB_VERSION));
  out += fmt::format("  \"seed\": {},\n", config.seed);
  out += fmt::format("  \"transport\": {},\n", quoted(config.transport));
  out += "  \"models\": [";
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const ModelSpec& m = config.models[i];
    out += fmt::format("{}\n    {{\"name\": {}, \"potential\": {}, \"domain\": [{}, {}], \"n\": {}}}", i ? "," : "",
                       quoted(m.name), quoted(m.potential), number(m.domain.lo), number(m.domain.hi), m.n);
  }
  out += "\n  ],\n  \"reports\": [";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const InequalityReport& r = result.reports[i];
    out += i ? ",\n    {" : "\n    {";
    out += fmt::format("\"id\": {}, \"context\": {}, \"lhs\": {}, \"rhs\": {}, \"margin\": {}, \"tolerance\": {}, ",
                       quoted(r.id), quoted(r.context), number(r.lhs), number(r.rhs), number(r.margin),
                       number(r.tolerance));
    out += fmt::format("\"verdict\": {}, \"constants\": {{", quoted(std::string(to_string(r.verdict))));
    bool first = true;
    for (const auto& [name, value] : r.constants) {
      out += fmt::format("{}{}: {}", first ? "" : ", ", quoted(name), number(value));
      first = false;
    }
    out += fmt::format("}}, \"note\": {}}}", quoted(r.note));
  }
  out += "\n  ],\n  \"errors\": [";
  for (std::size_t i = 0; i < result.errors.size(); ++i) {
    out += fmt::format("{}\n    {}", i ? "," : "", quoted(result.errors[i]));
  }
  out += fmt::format("\n  ],\n  \"exit_status\": {}\n}}\n", exit_status(result));
  return out;
}

std::string summary_csv(const SuiteResult& result) {
  std::string out = "id,context,lhs,rhs,margin,verdict\n";
  for (const auto& r : result.reports) {
    out += fmt::format("{},{},{},{},{},{}\n", csv_field(r.id), csv_field(r.context), number(r.lhs), number(r.rhs),
                       number(r.margin), to_string(r.verdict));
  }
  return out;
}

void write_outputs(const SuiteResult& result, const SuiteConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", p.string()));
    out << text;
  };
  write(dir / "reports.json", reports_json(result, config));
  write(dir / "summary.csv", summary_csv(result));
}

}  // namespace ineqlab
