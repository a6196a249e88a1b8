#include "dppfit/harness.hpp"

#include "dppfit/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace dppfit {
namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys{"name",        "model",        "nu",         "theta0",   "n",
                                        "d",           "r",            "order",      "replications",
                                        "seed",        "alpha_box",    "normalizer", "tail_tol", "max_order",
                                        "candidates",  "output_dir"};

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

std::vector<double> number_or_array(const json& j, const char* key) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ValidationError(std::string("config field '") + key + "' must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  throw ValidationError(std::string("config field '") + key + "' must be a number or an array");
}

CandidateModel parse_candidate(const json& j) {
  if (!j.is_object() || !j.contains("model")) throw ValidationError("each candidate needs a 'model'");
  CandidateModel c;
  c.family = family_from_string(field<std::string>(j, "model"));
  if (j.contains("nu")) c.nu = field<double>(j, "nu");
  return c;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

ParamSummary summarize(const std::vector<double>& xs) {
  ParamSummary s;
  if (xs.empty()) return s;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  s.mean = mean;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

ReplicateStatus classify(const std::exception& e) {
  if (dynamic_cast<const NoPairs*>(&e)) return ReplicateStatus::no_pairs;
  if (dynamic_cast<const DegenerateLikelihood*>(&e) || dynamic_cast<const DegenerateConfiguration*>(&e) ||
      dynamic_cast<const NormalizerDegenerate*>(&e))
    return ReplicateStatus::degenerate;
  if (dynamic_cast<const SamplerStall*>(&e)) return ReplicateStatus::sampler_failure;
  if (dynamic_cast<const InfoNotPD*>(&e)) return ReplicateStatus::inference_failure;
  return ReplicateStatus::failed;
}

void check_success(std::size_t successes, std::size_t total, const std::map<std::string, std::size_t>& failures) {
  if (static_cast<double>(successes) >= kMinSuccessFraction * static_cast<double>(total)) return;
  std::string detail;
  for (const auto& [k, v] : failures) detail += fmt::format(" {}={}", k, v);
  throw EstimationError(fmt::format("only {} of {} replicates succeeded (need {:.0f}%):{}", successes, total,
                                    100.0 * kMinSuccessFraction, detail));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

}  // namespace

ParamBox ExperimentConfig::box() const {
  if (alpha_box) return *alpha_box;
  ParamBox b;
  for (double a : theta0.alpha) {
    b.lower.push_back(a / 10.0);
    b.upper.push_back(a * 10.0);
  }
  return b;
}

CLConfig ExperimentConfig::cl_config() const {
  CLConfig c;
  c.order = order;
  c.normalizer = normalizer;
  c.radius = radius();
  c.alpha_box = box();
  return c;
}

std::vector<KernelModel> ExperimentConfig::candidate_models() const {
  if (candidates.empty()) return {model()};
  std::vector<KernelModel> out;
  for (const auto& c : candidates) out.push_back(c.model(d));
  return out;
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (!(n > 0.0)) throw ValidationError("window side n must be positive");
  if (d < 1 || d > 3) throw ValidationError("dimension d must be 1, 2 or 3");
  if (!(radius() > 0.0)) throw ValidationError("radius r must be positive");
  if (2.0 * radius() >= n) throw ValidationError("radius r must be below half the window side");
  if (order < 2 || order > kDefaultMaxTupleOrder) throw ValidationError("order must be 2, 3 or 4");
  const KernelModel m = model();
  validate_theta(m, theta0);
  cl_config().validate(m);
  check_existence(m, theta0);
  (void)candidate_models();
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kConfigKeys.count(key)) throw ValidationError("unknown config field '" + key + "'");
  ExperimentConfig c;
  try {
    if (j.contains("name")) c.name = field<std::string>(j, "name");
    c.family = family_from_string(field<std::string>(j, "model"));
    if (j.contains("nu")) c.nu = field<double>(j, "nu");
    if (j.contains("theta0")) {
      const json& t = j.at("theta0");
      c.theta0.lambda = field<double>(t, "lambda");
      c.theta0.alpha = number_or_array(t.at("alpha"), "theta0.alpha");
    }
    if (j.contains("n")) c.n = field<double>(j, "n");
    if (j.contains("d")) c.d = field<int>(j, "d");
    if (j.contains("r")) {
      const json& r = j.at("r");
      if (r.is_number()) {
        c.r_value = r.get<double>();
      } else if (r.is_string()) {
        const std::string rule = r.get<std::string>();
        if (rule.rfind("n/", 0) != 0) throw ValidationError("radius rule must look like \"n/8\"");
        try {
          std::size_t used = 0;
          c.r_divisor = std::stod(rule.substr(2), &used);
          if (used != rule.size() - 2 || !(c.r_divisor > 0.0)) throw std::invalid_argument("divisor");
        } catch (const std::logic_error&) {
          throw ValidationError("bad radius rule '" + rule + "'");
        }
      } else {
        throw ValidationError("config field 'r' must be a number or a rule like \"n/8\"");
      }
    }
    if (j.contains("order")) c.order = field<int>(j, "order");
    if (j.contains("replications")) c.replications = field<int>(j, "replications");
    if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed");
    if (j.contains("alpha_box")) {
      const json& b = j.at("alpha_box");
      ParamBox box;
      if (b.is_array() && b.size() == 2 && b[0].is_number()) {
        box.lower = {b[0].get<double>()};
        box.upper = {b[1].get<double>()};
      } else if (b.is_object()) {
        box.lower = number_or_array(b.at("lower"), "alpha_box.lower");
        box.upper = number_or_array(b.at("upper"), "alpha_box.upper");
      } else {
        throw ValidationError("alpha_box must be [lo, hi] or {\"lower\": ..., \"upper\": ...}");
      }
      c.alpha_box = box;
    }
    if (j.contains("normalizer")) c.normalizer = normalizer_kind_from_string(field<std::string>(j, "normalizer"));
    if (j.contains("tail_tol")) c.tail_tol = field<double>(j, "tail_tol");
    if (j.contains("max_order")) c.max_order = field<int>(j, "max_order");
    if (j.contains("candidates")) {
      if (!j.at("candidates").is_array()) throw ValidationError("candidates must be an array");
      for (const auto& cand : j.at("candidates")) c.candidates.push_back(parse_candidate(cand));
    }
    if (j.contains("output_dir")) c.output_dir = field<std::string>(j, "output_dir");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ExistenceViolated&) {
    throw;
  } catch (const DomainError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), 0);
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["model"] = std::string(dppfit::to_string(family));
  if (nu) j["nu"] = *nu;
  j["theta0"] = {{"lambda", theta0.lambda}, {"alpha", theta0.alpha}};
  j["n"] = n;
  j["d"] = d;
  j["r"] = r_value ? json(*r_value) : json(fmt::format("n/{}", r_divisor));
  j["r_resolved"] = radius();
  j["order"] = order;
  j["replications"] = replications;
  j["seed"] = seed;
  const ParamBox b = box();
  j["alpha_box"] = {{"lower", b.lower}, {"upper", b.upper}};
  j["normalizer"] = std::string(dppfit::to_string(normalizer));
  j["tail_tol"] = tail_tol;
  j["max_order"] = max_order;
  json cands = json::array();
  for (const auto& c : candidates) {
    json e{{"model", std::string(dppfit::to_string(c.family))}};
    if (c.nu) e["nu"] = *c.nu;
    cands.push_back(e);
  }
  j["candidates"] = cands;
  j["optimizer"] = {{"grid_points", kDefaultGridPoints}, {"tolerance", kDefaultArgTolerance}};
  return j;
}

std::string_view to_string(ReplicateStatus status) {
  switch (status) {
    case ReplicateStatus::ok:
      return "ok";
    case ReplicateStatus::no_pairs:
      return "no_pairs";
    case ReplicateStatus::degenerate:
      return "degenerate";
    case ReplicateStatus::sampler_failure:
      return "sampler_failure";
    case ReplicateStatus::inference_failure:
      return "inference_failure";
    case ReplicateStatus::failed:
      return "failed";
  }
  return "failed";
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DPPFIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, count); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

PointPattern simulate_replicate(const ExperimentConfig& config, const SpectralApprox& approx, std::size_t index) {
  RngStream rng(config.seed, index);
  return sample_dpp(approx, rng);
}

std::vector<std::filesystem::path> run_simulate(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const SpectralApprox approx =
      build_spectral_approx(config.model(), config.theta0, config.window(), config.tail_tol, config.max_order);
  std::filesystem::create_directories(config.output_dir);
  std::vector<std::filesystem::path> paths(config.replications);
  for (int i = 0; i < config.replications; ++i)
    paths[i] = config.output_dir / fmt::format("{}_pattern_{:04d}.csv", config.name, i);
  parallel_for(paths.size(), resolve_threads(options.threads),
               [&](std::size_t i) { write_csv(simulate_replicate(config, approx, i), paths[i]); });
  const auto window_path = config.output_dir / (config.name + "_window.json");
  write_window_json(config.window(), window_path);
  paths.insert(paths.begin(), window_path);
  return paths;
}

ReplicationSummary run_replications(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const KernelModel model = config.model();
  const RectWindow window = config.window();
  const CLConfig cl = config.cl_config();
  const SpectralApprox approx = build_spectral_approx(model, config.theta0, window, config.tail_tol, config.max_order);

  ReplicationSummary summary;
  summary.config = config;
  summary.records.resize(config.replications);
  parallel_for(summary.records.size(), resolve_threads(options.threads), [&](std::size_t i) {
    ReplicateRecord& rec = summary.records[i];
    rec.index = i;
    try {
      const PointPattern pattern = simulate_replicate(config, approx, i);
      rec.points = pattern.size();
      rec.lambda_score = static_cast<double>(pattern.size()) / config.theta0.lambda - window.area();
      const FitResult fit = fit_two_step(model, pattern, cl);
      rec.lambda_hat = fit.lambda_hat;
      rec.alpha_hat = fit.alpha_hat[0];
      rec.cl_value = fit.cl_value;
      rec.score_norm = fit.score_norm;
      rec.n_tuples = fit.n_tuples;
      rec.boundary_hit = fit.diagnostics.boundary_hit;
      if (config.order == 2)
        rec.score_at_truth = score2(model, config.theta0.alpha, pattern, cl.radius, cl.normalizer)[0];
      rec.status = ReplicateStatus::ok;
      const Theta estimate{fit.lambda_hat, fit.alpha_hat};
      if (options.se) {
        try {
          const SandwichResult s = sandwich(asymptotic_blocks(model, estimate, cl.radius), window, estimate);
          rec.se_lambda = s.std_errors[0];
          rec.se_alpha = s.std_errors[1];
          rec.alpha_interval = s.intervals[1];
        } catch (const Error& e) {
          rec.message = std::string("standard errors unavailable: ") + e.what();
        }
      }
      if (options.ic) {
        try {
          rec.ic_value = ic2(model, fit, cl.radius).ic_value;
        } catch (const Error& e) {
          rec.message = std::string("IC unavailable: ") + e.what();
        }
      }
    } catch (const Error& e) {
      rec.status = classify(e);
      rec.message = e.what();
    }
  });

  std::vector<double> lambdas, alphas;
  std::size_t with_interval = 0, covered = 0;
  for (const auto& rec : summary.records) {
    if (rec.status != ReplicateStatus::ok) {
      ++summary.failures[std::string(to_string(rec.status))];
      continue;
    }
    ++summary.successes;
    summary.boundary_hits += rec.boundary_hit ? 1 : 0;
    lambdas.push_back(rec.lambda_hat);
    alphas.push_back(rec.alpha_hat);
    if (rec.alpha_interval) {
      ++with_interval;
      covered += rec.alpha_interval->contains(config.theta0.alpha[0]) ? 1 : 0;
    }
  }
  check_success(summary.successes, summary.records.size(), summary.failures);
  summary.lambda = summarize(lambdas);
  summary.alpha = summarize(alphas);
  if (with_interval > 0) summary.alpha_coverage = static_cast<double>(covered) / static_cast<double>(with_interval);
  return summary;
}

std::vector<std::filesystem::path> write_replication(const ReplicationSummary& summary,
                                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string& name = summary.config.name;
  const auto rep_path = dir / (name + "_replicates.csv");
  {
    auto out = open_out(rep_path);
    out << "index,status,points,lambda_hat,alpha_hat,cl,score_norm,n_tuples,boundary_hit,score_at_truth,"
           "lambda_score,se_lambda,se_alpha,alpha_lower,alpha_upper,ic\n";
    for (const auto& r : summary.records) {
      const bool ok = r.status == ReplicateStatus::ok;
      out << r.index << ',' << to_string(r.status) << ',' << r.points << ','
          << (ok ? num(r.lambda_hat) : "NA") << ',' << (ok ? num(r.alpha_hat) : "NA") << ','
          << (ok ? num(r.cl_value) : "NA") << ',' << (ok ? num(r.score_norm) : "NA") << ',' << r.n_tuples << ','
          << (r.boundary_hit ? 1 : 0) << ',' << (ok ? num(r.score_at_truth) : "NA") << ','
          << num(r.lambda_score) << ',' << opt_num(r.se_lambda) << ',' << opt_num(r.se_alpha) << ','
          << (r.alpha_interval ? num(r.alpha_interval->lower) : "NA") << ','
          << (r.alpha_interval ? num(r.alpha_interval->upper) : "NA") << ',' << opt_num(r.ic_value) << '\n';
    }
  }
  const auto table_path = dir / (name + "_summary.csv");
  {
    auto out = open_out(table_path);
    out << "parameter,truth,mean,sd,successes,replications\n";
    out << "lambda," << num(summary.config.theta0.lambda) << ',' << num(summary.lambda.mean) << ','
        << opt_num(summary.lambda.sd) << ',' << summary.successes << ',' << summary.records.size() << '\n';
    out << "alpha," << num(summary.config.theta0.alpha[0]) << ',' << num(summary.alpha.mean) << ','
        << opt_num(summary.alpha.sd) << ',' << summary.successes << ',' << summary.records.size() << '\n';
  }
  const auto json_path = dir / (name + "_summary.json");
  {
    json j;
    j["config"] = summary.config.to_json();
    j["replications"] = summary.records.size();
    j["successes"] = summary.successes;
    j["failures"] = summary.failures;
    j["boundary_hits"] = summary.boundary_hits;
    j["lambda"] = {{"mean", summary.lambda.mean}, {"sd", opt_json(summary.lambda.sd)}};
    j["alpha"] = {{"mean", summary.alpha.mean}, {"sd", opt_json(summary.alpha.sd)}};
    j["alpha_coverage"] = opt_json(summary.alpha_coverage);
    auto out = open_out(json_path);
    out << j.dump(2) << '\n';
  }
  return {rep_path, table_path, json_path};
}

FitOutput run_fit(const ExperimentConfig& config, const PointPattern& pattern, const RunOptions& options) {
  std::vector<KernelModel> models{config.model()};
  if (options.ic)
    for (const auto& m : config.candidate_models())
      if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
  CLConfig cl = config.cl_config();
  FitOutput out;
  std::vector<ICReport> reports;
  for (const auto& m : models) {
    const FitResult fit = fit_two_step(m, pattern, cl);
    out.models.push_back(m.name());
    out.fits.push_back(fit);
    const Theta estimate{fit.lambda_hat, fit.alpha_hat};
    out.standard_errors.push_back(
        options.se ? std::optional(sandwich(asymptotic_blocks(m, estimate, cl.radius), pattern.window(), estimate))
                   : std::nullopt);
    if (options.ic) {
      reports.push_back(ic2(m, fit, cl.radius));
      out.reports.push_back(reports.back());
    } else {
      out.reports.push_back(std::nullopt);
    }
  }
  if (options.ic) out.ranking = compare_models(reports);
  return out;
}

json to_json(const FitOutput& output, const ExperimentConfig& config) {
  json fits = json::array();
  for (std::size_t i = 0; i < output.fits.size(); ++i) {
    const FitResult& f = output.fits[i];
    json e;
    e["model"] = output.models[i];
    e["lambda_hat"] = f.lambda_hat;
    e["alpha_hat"] = f.alpha_hat;
    e["cl"] = f.cl_value;
    e["score_norm"] = f.score_norm;
    e["normalizer"] = f.normalizer;
    e["n_tuples"] = f.n_tuples;
    e["diagnostics"] = {{"empty_pattern", f.diagnostics.empty_pattern},
                        {"boundary_hit", f.diagnostics.boundary_hit},
                        {"degenerate_tuples", f.diagnostics.degenerate_tuples},
                        {"score_polished", f.diagnostics.score_polished},
                        {"normalizer_imprecise", f.diagnostics.normalizer_imprecise},
                        {"evaluations", f.diagnostics.evaluations}};
    if (const auto& s = output.standard_errors[i]) {
      e["std_errors"] = {{"lambda", s->std_errors[0]}, {"alpha", s->std_errors[1]}};
      e["intervals"] = {{"lambda", {s->intervals[0].lower, s->intervals[0].upper}},
                        {"alpha", {s->intervals[1].lower, s->intervals[1].upper}}};
    }
    if (const auto& r = output.reports[i])
      e["ic"] = {{"cl_at_optimum", r->cl_at_optimum},
                 {"penalty", r->penalty},
                 {"ic_value", r->ic_value},
                 {"unreliable", r->unreliable},
                 {"imprecise", r->imprecise}};
    fits.push_back(e);
  }
  json j;
  j["config"] = config.to_json();
  j["fits"] = fits;
  if (!output.ranking.empty()) {
    json ranking = json::array();
    for (std::size_t k : output.ranking) ranking.push_back(output.models[k]);
    j["ranking"] = ranking;
  }
  return j;
}

ComparisonSummary run_comparison(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const KernelModel truth = config.model();
  const std::vector<KernelModel> models = config.candidate_models();
  const CLConfig cl = config.cl_config();
  const SpectralApprox approx =
      build_spectral_approx(truth, config.theta0, config.window(), config.tail_tol, config.max_order);

  ComparisonSummary summary;
  summary.config = config;
  for (const auto& m : models) summary.models.push_back(m.name());
  summary.selections.assign(models.size(), 0);
  summary.records.resize(config.replications);
  parallel_for(summary.records.size(), resolve_threads(options.threads), [&](std::size_t i) {
    ComparisonRecord& rec = summary.records[i];
    rec.index = i;
    try {
      const PointPattern pattern = simulate_replicate(config, approx, i);
      std::vector<ICReport> reports;
      for (const auto& m : models) {
        const FitResult fit = fit_two_step(m, pattern, cl);
        reports.push_back(ic2(m, fit, cl.radius));
        rec.ic_values.push_back(reports.back().ic_value);
        rec.cl_values.push_back(reports.back().cl_at_optimum);
      }
      rec.selected = compare_models(reports).front();
      rec.status = ReplicateStatus::ok;
    } catch (const Error& e) {
      rec.status = classify(e);
      rec.message = e.what();
    }
  });
  for (const auto& rec : summary.records) {
    if (rec.status != ReplicateStatus::ok) {
      ++summary.failures[std::string(to_string(rec.status))];
      continue;
    }
    ++summary.successes;
    ++summary.selections[rec.selected];
  }
  check_success(summary.successes, summary.records.size(), summary.failures);
  return summary;
}

std::vector<std::filesystem::path> write_comparison(const ComparisonSummary& summary,
                                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string& name = summary.config.name;
  const auto rec_path = dir / (name + "_compare.csv");
  {
    auto out = open_out(rec_path);
    out << "index,status";
    for (const auto& m : summary.models) out << ",ic_" << m << ",cl_" << m;
    out << ",selected\n";
    for (const auto& r : summary.records) {
      const bool ok = r.status == ReplicateStatus::ok;
      out << r.index << ',' << to_string(r.status);
      for (std::size_t k = 0; k < summary.models.size(); ++k) {
        out << ',' << (ok ? num(r.ic_values[k]) : "NA");
        out << ',' << (ok ? num(r.cl_values[k]) : "NA");
      }
      out << ',' << (ok ? summary.models[r.selected] : "NA") << '\n';
    }
  }
  const auto table_path = dir / (name + "_selection.csv");
  {
    auto out = open_out(table_path);
    out << "model,selected,frequency\n";
    for (std::size_t k = 0; k < summary.models.size(); ++k)
      out << summary.models[k] << ',' << summary.selections[k] << ','
          << num(summary.successes ? static_cast<double>(summary.selections[k]) / summary.successes : 0.0) << '\n';
  }
  const auto json_path = dir / (name + "_selection.json");
  {
    json j;
    j["config"] = summary.config.to_json();
    j["truth"] = summary.config.model().name();
    j["successes"] = summary.successes;
    j["failures"] = summary.failures;
    json sel = json::object();
    for (std::size_t k = 0; k < summary.models.size(); ++k) sel[summary.models[k]] = summary.selections[k];
    j["selections"] = sel;
    auto out = open_out(json_path);
    out << j.dump(2) << '\n';
  }
  return {rec_path, table_path, json_path};
}

}  // namespace dppfit
