#include "mfc/config.hpp"

#include "mfc/csv.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace mfc {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

std::uint64_t to_uint(const std::string& s) {
  if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
  std::size_t pos = 0;
  const auto v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

Field real(std::string section, std::string key,
           std::function<double&(ExperimentConfig&)> ref) {
  return {std::move(section), std::move(key),
          [ref](ExperimentConfig& c, const std::string& s) { ref(c) = to_double(s); },
          [ref](const ExperimentConfig& c) {
            return csv::format_double(ref(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Int>
Field integer(std::string section, std::string key,
              std::function<Int&(ExperimentConfig&)> ref) {
  return {std::move(section), std::move(key),
          [ref](ExperimentConfig& c, const std::string& s) {
            ref(c) = static_cast<Int>(to_uint(s));
          },
          [ref](const ExperimentConfig& c) {
            return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
          }};
}

Field optional_real(std::string section, std::string key,
                    std::function<std::optional<double>&(ExperimentConfig&)> ref) {
  return {std::move(section), std::move(key),
          [ref](ExperimentConfig& c, const std::string& s) {
            if (s == "auto") {
              ref(c).reset();
            } else {
              ref(c) = to_double(s);
            }
          },
          [ref](const ExperimentConfig& c) {
            const auto& v = ref(const_cast<ExperimentConfig&>(c));
            return v ? csv::format_double(*v) : std::string("auto");
          }};
}

template <typename E>
Field choice(std::string section, std::string key,
             std::function<E&(ExperimentConfig&)> ref,
             std::vector<std::pair<std::string, E>> names) {
  return {std::move(section), std::move(key),
          [ref, names](ExperimentConfig& c, const std::string& s) {
            for (const auto& [n, v] : names) {
              if (n == s) {
                ref(c) = v;
                return;
              }
            }
            std::string allowed;
            for (const auto& [n, v] : names) allowed += " " + n;
            throw std::invalid_argument("expected one of" + allowed);
          },
          [ref, names](const ExperimentConfig& c) {
            const E v = ref(const_cast<ExperimentConfig&>(c));
            for (const auto& [n, e] : names) {
              if (e == v) return n;
            }
            return std::string("?");
          }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f = {
      real("model", "a", [](C& c) -> double& { return c.model.a; }),
      real("model", "b", [](C& c) -> double& { return c.model.b; }),
      real("model", "c", [](C& c) -> double& { return c.model.c; }),
      real("model", "sigma_ext", [](C& c) -> double& { return c.model.sigma_ext; }),
      real("model", "V_rev", [](C& c) -> double& { return c.model.V_rev; }),
      real("model", "a_r", [](C& c) -> double& { return c.model.a_r; }),
      real("model", "a_d", [](C& c) -> double& { return c.model.a_d; }),
      real("model", "T_max", [](C& c) -> double& { return c.model.T_max; }),
      real("model", "lambda", [](C& c) -> double& { return c.model.lambda; }),
      real("model", "V_T", [](C& c) -> double& { return c.model.V_T; }),
      real("model", "J", [](C& c) -> double& { return c.model.J; }),
      real("model", "sigma_J", [](C& c) -> double& { return c.model.sigma_J; }),
      optional_real("model", "abar",
                    [](C& c) -> std::optional<double>& { return c.model.abar; }),
      optional_real("model", "bbar",
                    [](C& c) -> std::optional<double>& { return c.model.bbar; }),
      real("model", "cutoff_margin",
           [](C& c) -> double& { return c.model.cutoff_margin; }),
      choice<NoiseMode>("model", "noise_mode",
                        [](C& c) -> NoiseMode& { return c.model.noise_mode; },
                        {{"external_only", NoiseMode::external_only},
                         {"full", NoiseMode::full}}),

      real("grid", "t_end", [](C& c) -> double& { return c.t_end; }),
      real("grid", "dt", [](C& c) -> double& { return c.dt; }),

      real("control", "alpha_min", [](C& c) -> double& { return c.alpha_min; }),
      real("control", "alpha_max", [](C& c) -> double& { return c.alpha_max; }),
      real("control", "initial", [](C& c) -> double& { return c.alpha_initial; }),

      choice<ReferenceKind>("cost", "reference",
                            [](C& c) -> ReferenceKind& { return c.reference.kind; },
                            {{"pulse_lfp", ReferenceKind::pulse_lfp},
                             {"constant_alpha", ReferenceKind::constant_alpha},
                             {"resting", ReferenceKind::resting}}),
      real("cost", "pulse_amplitude",
           [](C& c) -> double& { return c.reference.pulse_amplitude; }),
      real("cost", "pulse_duration",
           [](C& c) -> double& { return c.reference.pulse_duration; }),
      real("cost", "switch_time",
           [](C& c) -> double& { return c.reference.switch_time; }),
      real("cost", "reference_alpha",
           [](C& c) -> double& { return c.reference.alpha; }),
      real("cost", "reference_J",
           [](C& c) -> double& { return c.reference.coupling_J; }),
      integer<std::size_t>("cost", "reference_particles",
                           [](C& c) -> std::size_t& { return c.reference.n_particles; }),
      real("cost", "control_penalty",
           [](C& c) -> double& { return c.control_penalty; }),

      real("optimizer", "s0", [](C& c) -> double& { return c.optimizer.s0; }),
      optional_real("optimizer", "eps",
                    [](C& c) -> std::optional<double>& { return c.optimizer.eps; }),
      integer<std::size_t>("optimizer", "max_iters",
                           [](C& c) -> std::size_t& { return c.optimizer.max_iters; }),
      integer<std::size_t>(
          "optimizer", "max_backtracks",
          [](C& c) -> std::size_t& { return c.optimizer.max_backtracks; }),
      choice<SeedPolicy>("optimizer", "seed_policy",
                         [](C& c) -> SeedPolicy& { return c.optimizer.seed_policy; },
                         {{"frozen", SeedPolicy::frozen},
                          {"per_iter", SeedPolicy::per_iter}}),

      choice<InitConfig::Kind>("init", "kind",
                               [](C& c) -> InitConfig::Kind& { return c.init.kind; },
                               {{"orbit", InitConfig::Kind::orbit},
                                {"point", InitConfig::Kind::point}}),
      real("init", "v0", [](C& c) -> double& { return c.init.anchor[kV]; }),
      real("init", "w0", [](C& c) -> double& { return c.init.anchor[kW]; }),
      real("init", "y0", [](C& c) -> double& { return c.init.anchor[kY]; }),
      integer<std::size_t>("init", "orbit_samples",
                           [](C& c) -> std::size_t& { return c.init.orbit_samples; }),

      choice<MeanFieldConvention>(
          "adjoint", "convention",
          [](C& c) -> MeanFieldConvention& { return c.adjoint.convention; },
          {{"swapped", MeanFieldConvention::swapped},
           {"literal", MeanFieldConvention::literal}}),
      choice<AdjointStepping>(
          "adjoint", "stepping",
          [](C& c) -> AdjointStepping& { return c.adjoint.stepping; },
          {{"consistent", AdjointStepping::consistent},
           {"explicit_euler", AdjointStepping::explicit_euler}}),

      integer<std::size_t>("run", "n_particles",
                           [](C& c) -> std::size_t& { return c.run.n_particles; }),
      integer<std::uint64_t>("run", "seed",
                             [](C& c) -> std::uint64_t& { return c.run.seed; }),
      integer<int>("run", "threads", [](C& c) -> int& { return c.run.threads; }),
      {"run", "out",
       [](C& c, const std::string& s) { c.run.out = s; },
       [](const C& c) { return c.run.out.string(); }},
  };
  return f;
}

}  // namespace

std::string to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::pulse_lfp: return "pulse_lfp";
    case ReferenceKind::constant_alpha: return "constant_alpha";
    case ReferenceKind::resting: return "resting";
  }
  return "?";
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& key, const std::string& what) {
    throw std::invalid_argument("config " + key + ": " + what);
  };
  try {
    validate(cfg.model);
  } catch (const std::invalid_argument& e) {
    fail("[model]", e.what());
  }
  try {
    (void)cfg.grid();
  } catch (const std::invalid_argument& e) {
    fail("[grid]", e.what());
  }
  if (!(cfg.alpha_min <= cfg.alpha_max)) fail("control.alpha_min", "exceeds alpha_max");
  if (cfg.alpha_initial < cfg.alpha_min || cfg.alpha_initial > cfg.alpha_max) {
    fail("control.initial", "outside [alpha_min, alpha_max]");
  }
  if (cfg.reference.pulse_duration < 0.0) fail("cost.pulse_duration", "negative");
  if (cfg.control_penalty < 0.0) fail("cost.control_penalty", "negative");
  if (!(cfg.optimizer.s0 > 0.0)) fail("optimizer.s0", "must be positive");
  if (cfg.optimizer.eps && !(*cfg.optimizer.eps > 0.0)) {
    fail("optimizer.eps", "must be positive");
  }
  if (cfg.init.orbit_samples == 0) fail("init.orbit_samples", "must be positive");
  if (cfg.run.n_particles == 0) fail("run.n_particles", "must be positive");
  if (cfg.run.threads < 0) fail("run.threads", "negative");
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw std::invalid_argument("config: key '" + section +
                                  "' outside of any section");
    }
    bool section_known = false;
    for (const auto& f : fields()) section_known |= f.section == section;
    if (!section_known) {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const std::string raw = value.get_value<std::string>();
      bool known = false;
      for (const auto& f : fields()) {
        if (f.section != section || f.key != key) continue;
        known = true;
        try {
          f.set(cfg, raw);
        } catch (const std::exception& e) {
          throw std::invalid_argument("config " + section + "." + key +
                                      ": bad value '" + raw + "' (" + e.what() + ")");
        }
      }
      if (!known) {
        throw std::invalid_argument("config: unknown key " + section + "." + key);
      }
    }
  }
  cfg.optimizer.n_particles = cfg.run.n_particles;
  cfg.optimizer.seed = cfg.run.seed;
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

void disable_noise(ExperimentConfig& cfg) {
  cfg.model.sigma_ext = 0.0;
  cfg.model.sigma_J = 0.0;
  cfg.model.noise_mode = NoiseMode::external_only;
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("MFC_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

}  // namespace mfc
