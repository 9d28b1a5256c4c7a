#include "divemeta/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "divemeta/dive.hpp"
#include "divemeta/qe.hpp"
#include "divemeta/sim_config.hpp"

namespace divemeta {

namespace {

struct PValues {
  std::optional<double> z;
  std::optional<double> t;
};

PValues pvalues(const PooledResult& r) {
  if (!(r.se > 0.0)) return {};
  return {wald_pvalue(r.estimate, r.se, r.n_studies, CiFlavor::Z),
          wald_pvalue(r.estimate, r.se, r.n_studies, CiFlavor::T)};
}

bool show_z(const RunConfig& cfg) { return cfg.ci != CiSelection::T; }
bool show_t(const RunConfig& cfg) { return cfg.ci != CiSelection::Z; }

std::string format_p(const std::optional<double>& p) {
  if (!p) return "= NA";
  if (*p < 0.001) return "< 0.001";
  return fmt::format("= {:.3f}", *p);
}

std::string render_text(const PooledResult& r, const RunConfig& cfg, const PValues& p) {
  const int level = static_cast<int>(std::lround(100.0 * (1.0 - r.alpha)));
  std::string out;
  out += fmt::format("Method:        {}\n", to_string(r.method));
  out += fmt::format("Studies (N):   {}\n", r.n_studies);
  out += fmt::format("Participants:  {}\n", r.n_total);
  out += fmt::format("Estimate:      {:.2f}\n", r.estimate);
  out += fmt::format("SE:            {:.2f}\n", r.se);
  if (r.tau2) out += fmt::format("tau^2 (DL):    {:.2f}\n", *r.tau2);
  if (show_z(cfg)) {
    out += fmt::format("{}% CI (z):     [{:.2f}, {:.2f}]  p {}\n", level, r.ci_z.lo, r.ci_z.hi, format_p(p.z));
  }
  if (show_t(cfg)) {
    out += fmt::format("{}% CI (t, df={}): [{:.2f}, {:.2f}]  p {}\n", level, r.df, r.ci_t.lo, r.ci_t.hi,
                       format_p(p.t));
  }
  if (!r.weights.empty()) {
    out += "Weights:\n";
    std::size_t width = 0;
    for (const auto& id : r.study_ids) width = std::max(width, id.size());
    for (std::size_t i = 0; i < r.weights.size(); ++i) {
      out += fmt::format("  {:<{}}  {:.3f}\n", r.study_ids[i], width, r.weights[i]);
    }
    const auto imax = static_cast<std::size_t>(std::max_element(r.weights.begin(), r.weights.end()) - r.weights.begin());
    out += fmt::format("Max weight:    {:.3f} ({})\n", r.weights[imax], r.study_ids[imax]);
  }
  return out;
}

std::string render_csv(const PooledResult& r, const RunConfig& cfg, const PValues& p) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("NA"); };
  std::string out = "field,value\n";
  out += fmt::format("method,{}\n", to_string(r.method));
  out += fmt::format("n_studies,{}\nn_total,{}\n", r.n_studies, r.n_total);
  out += fmt::format("estimate,{}\nvariance,{}\nse,{}\nalpha,{}\n", r.estimate, r.variance, r.se, r.alpha);
  out += fmt::format("tau2,{}\n", opt(r.tau2));
  if (show_z(cfg)) out += fmt::format("ci_z_lo,{}\nci_z_hi,{}\np_z,{}\n", r.ci_z.lo, r.ci_z.hi, opt(p.z));
  if (show_t(cfg)) {
    out += fmt::format("df,{}\nci_t_lo,{}\nci_t_hi,{}\np_t,{}\n", r.df, r.ci_t.lo, r.ci_t.hi, opt(p.t));
  }
  for (std::size_t i = 0; i < r.weights.size(); ++i) {
    out += fmt::format("weight:{},{}\n", r.study_ids[i], r.weights[i]);
  }
  if (!r.weights.empty()) out += fmt::format("max_weight,{}\n", *std::max_element(r.weights.begin(), r.weights.end()));
  return out;
}

std::string render_json(const PooledResult& r, const RunConfig& cfg, const PValues& p) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["method"] = std::string(to_string(r.method));
  j["n_studies"] = r.n_studies;
  j["n_total"] = r.n_total;
  j["estimate"] = r.estimate;
  j["variance"] = r.variance;
  j["se"] = r.se;
  j["alpha"] = r.alpha;
  j["tau2"] = opt(r.tau2);
  if (show_z(cfg)) j["z"] = {{"ci", {r.ci_z.lo, r.ci_z.hi}}, {"p", opt(p.z)}};
  if (show_t(cfg)) j["t"] = {{"df", r.df}, {"ci", {r.ci_t.lo, r.ci_t.hi}}, {"p", opt(p.t)}};
  json weights = json::array();
  for (std::size_t i = 0; i < r.weights.size(); ++i) {
    weights.push_back({{"study_id", r.study_ids[i]}, {"weight", r.weights[i]}});
  }
  j["weights"] = weights;
  if (!r.weights.empty()) {
    const auto imax = static_cast<std::size_t>(std::max_element(r.weights.begin(), r.weights.end()) - r.weights.begin());
    j["max_weight"] = {{"study_id", r.study_ids[imax]}, {"weight", r.weights[imax]}};
  }
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string scenario_columns(const SimScenario& s) {
  return fmt::format("{},{},{},{},{},{},{}", to_string(s.outcome), s.n_studies, to_string(s.size_pattern), s.avg_n,
                     s.replicates, s.seed, s.i2);
}

constexpr const char* kScenarioHeader = "outcome,n_studies,size_pattern,avg_n,replicates,seed,i2";

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  f << content;
  if (!f) throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

PooledResult run_pool(std::span<const StudyRecord> records, const RunConfig& cfg) {
  switch (cfg.method) {
    case PoolMethod::Dive: return dive_pool(records, cfg.alpha);
    case PoolMethod::QeRe: return qe_pool(records, IvwModel::RE, cfg.alpha);
    case PoolMethod::QeFe: return qe_pool(records, IvwModel::FE, cfg.alpha);
  }
  throw Error(ErrorCode::InvalidParams, "unknown method");
}

std::string render_pooled(const PooledResult& result, const RunConfig& cfg) {
  const PValues p = pvalues(result);
  switch (cfg.output) {
    case OutputFormat::Text: return render_text(result, cfg, p);
    case OutputFormat::Csv: return render_csv(result, cfg, p);
    case OutputFormat::Json: return render_json(result, cfg, p);
  }
  return {};
}

std::string metrics_csv(std::span<const MetricsReport> reports) {
  std::string out = fmt::format(
      "{},method,mu,pct_bias_point,pct_mse_point,pct_bias_var,pct_mse_var,cp_z,aw_z,cp_t,aw_t\n", kScenarioHeader);
  for (const auto& rep : reports) {
    for (const auto& m : rep.methods) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", scenario_columns(rep.scenario), to_string(m.method),
                         rep.mu, m.pct_bias_point, m.pct_mse_point, m.pct_bias_var, m.pct_mse_var, m.z.cp, m.z.aw,
                         m.t.cp, m.t.aw);
    }
  }
  return out;
}

std::string replicate_errors_csv(std::span<const MetricsReport> reports) {
  std::string out = fmt::format("{},method,replicate,point_error_pct,var_error_pct\n", kScenarioHeader);
  for (const auto& rep : reports) {
    const std::string scen = scenario_columns(rep.scenario);
    for (const auto& m : rep.methods) {
      for (std::size_t r = 0; r < m.point_errors.size(); ++r) {
        out += fmt::format("{},{},{},{},{}\n", scen, to_string(m.method), r, m.point_errors[r], m.var_errors[r]);
      }
    }
  }
  return out;
}

int cmd_pool(const std::filesystem::path& csv, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const StudyTable table = parse_study_csv(csv);
    PooledResult result = run_pool(table.records, cfg);
    std::vector<std::string> warnings = table.warnings;
    for (const auto& w : result.warnings) {
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
    }
    for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
    result.warnings = std::move(warnings);
    out << render_pooled(result, cfg);
    return 0;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
}

int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& out_dir, int workers,
                 std::ostream& out, std::ostream& err) {
  try {
    const SimConfig cfg = parse_sim_config(config);
    std::vector<MetricsReport> reports;
    for (const auto& s : cfg.scenarios) {
      fmt::print(out, "running {} N={} {} n={} I2={} R={} seed={}\n", to_string(s.outcome), s.n_studies,
                 to_string(s.size_pattern), s.avg_n, s.i2, s.replicates, s.seed);
      reports.push_back(run_scenario(s, {workers, cfg.methods}));
    }
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / kMetricsFile, metrics_csv(reports));
    write_file(out_dir / kReplicateErrorsFile, replicate_errors_csv(reports));
    fmt::print(out, "wrote {} and {}\n", (out_dir / kMetricsFile).string(), (out_dir / kReplicateErrorsFile).string());
    return 0;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
}

}  // namespace divemeta
