// hwu: genome scans, simulation studies and mixture p-values.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwu/errors.hpp"
#include "hwu/quadform.hpp"
#include "hwu/scan.hpp"
#include "hwu/simgen.hpp"

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

// from_chars is locale independent, unlike strtod/istream.
double to_double(const std::string& text, const char* what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw hwu::Error(hwu::ErrorCode::parse_error,
                     std::string("bad number '") + text + "' for " + what);
  }
  return v;
}

std::vector<double> to_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(item, what));
  return out;
}

std::string format_general(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
  (void)ec;
  return std::string(buf, ptr);
}

struct ScanArgs {
  std::string genotypes, phenotype, covariates, kappa = "constant", gsim = "crossprod";
  std::string modes = "hwu", out;
  unsigned threads = 0;
  std::uint64_t seed = 1;
  int perm = 0;
};

int run_scan_command(const ScanArgs& a) {
  hwu::LoadOptions load;
  load.genotypes = a.genotypes;
  load.phenotype = a.phenotype;
  if (!a.covariates.empty()) load.covariates = a.covariates;
  load.kappa = a.kappa;
  const hwu::ScanInputs inputs = hwu::load_inputs(load);
  const auto& r = inputs.report;
  std::cerr << "samples: genotypes " << r.genotype_samples << ", phenotype " << r.phenotype_samples
            << ", missing phenotype " << r.missing_phenotype << ", used " << r.used_samples
            << "; imputed dosages " << r.imputed_dosages << "\n";

  hwu::ScanOptions opts;
  opts.modes.clear();
  for (const auto& m : split(a.modes, ',')) opts.modes.push_back(hwu::parse_weight_mode(m));
  opts.gsim = hwu::parse_gsim_kind(a.gsim);
  opts.permutations = a.perm;
  opts.seed = a.seed;
  opts.threads = a.threads;

  hwu::ResultWriter writer(a.out);
  const hwu::ScanSummary s =
      hwu::run_scan(inputs, opts, [&](const hwu::ScanRecord& rec) { writer.write(rec); });
  writer.commit();
  std::cerr << "variants: " << s.records << " (ok " << s.ok << ", fallback " << s.fallback
            << ", skipped " << s.skipped << ", failed " << s.failed << ")\n";
  return 0;
}

struct SimArgs {
  std::string scenario = "two_pop", phenotype, error, betas, methods, out, true_kappa;
  long n = 0;
  int replicates = 1000;
  double alpha = 0.05, mu_beta = 0, sigma_beta = 0, maf = 0, sigma_c = 0;
  int n_covariates = 0;
  bool confounding = false;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

int run_sim_command(const SimArgs& a, const CLI::App& cmd) {
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  hwu::SimulationConfig cfg = hwu::default_config(hwu::parse_scenario(a.scenario));
  if (given("--n")) cfg.n = a.n;
  if (given("--phenotype")) cfg.phenotype = hwu::parse_phenotype_kind(a.phenotype);
  if (given("--error")) cfg.error = hwu::parse_error_dist(a.error, &cfg.t_df);
  if (given("--betas")) cfg.betas = to_doubles(a.betas, "--betas");
  if (given("--mu-beta")) cfg.mu_beta = a.mu_beta;
  if (given("--sigma-beta")) cfg.sigma_beta = a.sigma_beta;
  if (given("--maf")) cfg.maf = a.maf;
  if (given("--sigma-c")) cfg.sigma_c = a.sigma_c;
  if (given("--covariates")) cfg.n_covariates = a.n_covariates;
  if (given("--confounding")) cfg.confounding = a.confounding;
  if (given("--true-kappa")) {
    if (a.true_kappa == "euclidean") cfg.true_kappa = hwu::KappaKind::euclidean;
    else if (a.true_kappa == "crossprod") cfg.true_kappa = hwu::KappaKind::crossprod;
    else throw hwu::Error(hwu::ErrorCode::invalid_parameter, "--true-kappa must be euclidean or crossprod");
  }
  cfg.seed = a.seed;
  cfg.validate();

  std::vector<hwu::MethodSpec> methods;
  const std::string list = a.methods.empty() ? "hwu,nhwu,glm" : a.methods;
  for (const auto& m : split(list, ',')) methods.push_back(hwu::parse_method(m));

  const hwu::PowerStudy study = hwu::power_study(cfg, methods, a.replicates, a.alpha, a.threads);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw hwu::Error(hwu::ErrorCode::io_error, "cannot open " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "method\tscenario\tbeta_spec\trejection_rate\treplicates\tmc_stderr\n";
  const std::string spec = hwu::beta_spec(cfg);
  for (const auto& e : study.estimates) {
    os << e.method << '\t' << hwu::to_string(cfg.scenario) << '\t' << spec << '\t'
       << format_general(e.rejection_rate) << '\t' << e.replicates << '\t'
       << format_general(e.mc_stderr) << '\n';
  }
  return 0;
}

int run_pvalue_command(const std::string& lambdas, const std::string& q, bool verbose) {
  const hwu::ChiSquareMixture mix(to_doubles(lambdas, "--lambdas"));
  const hwu::PValue p = hwu::mixture_pvalue(mix, to_double(q, "--q"));
  std::cout << format_general(p.value) << '\n';
  if (verbose) {
    std::cerr << "method " << hwu::to_string(p.method) << ", fault " << static_cast<int>(p.fault)
              << '\n';
  }
  return 0;
}

// Inlines `sim --config FILE` as --key=value arguments placed before the
// explicit flags, so flags given on the command line take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> in(argv, argv + argc);
  if (in.size() < 2 || in[1] != "sim") return in;
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 2; i < in.size(); ++i) {
    if (in[i] == "--config" && i + 1 < in.size()) {
      path = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      path = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  if (path.empty()) return in;

  std::ifstream file(path);
  if (!file) throw hwu::Error(hwu::ErrorCode::io_error, "cannot open " + path);
  std::vector<std::string> out{in[0], in[1]};
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(file, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw hwu::Error(hwu::ErrorCode::parse_error,
                       path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneity weighted U test"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Test every variant in a genotype file");
  scan_cmd->add_option("--genotypes", scan.genotypes, "Variant-major dosage file")->required();
  scan_cmd->add_option("--phenotype", scan.phenotype, "sample_id<TAB>value")->required();
  scan_cmd->add_option("--covariates", scan.covariates, "Adjustment covariates (with header)");
  scan_cmd->add_option("--kappa", scan.kappa,
                       "euclidean:<file>|crossprod:<file>|ibs:<genofile>|constant|file:<matrix>");
  scan_cmd->add_option("--gsim", scan.gsim, "crossprod|match");
  scan_cmd->add_option("--mode", scan.modes, "Comma list of hwu, nhwu, phwu");
  scan_cmd->add_option("--threads", scan.threads, "Worker threads (0 = all cores)");
  scan_cmd->add_option("--seed", scan.seed, "Permutation seed");
  scan_cmd->add_option("--perm", scan.perm, "Permutations per variant (0 = off, else >= 100)");
  scan_cmd->add_option("--out", scan.out, "Results file")->required();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Estimate type I error or power by simulation");
  sim_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string sim_config;
  sim_cmd->add_option("--config", sim_config, "key=value settings file; flags override it");
  sim_cmd->add_option("--scenario", sim.scenario, "two_pop|multi_pop|nonnormal");
  sim_cmd->add_option("--n", sim.n, "Sample size");
  sim_cmd->add_option("--replicates", sim.replicates, "Replicates");
  sim_cmd->add_option("--alpha", sim.alpha, "Significance level");
  sim_cmd->add_option("--phenotype", sim.phenotype, "binary|continuous");
  sim_cmd->add_option("--error", sim.error, "normal|t<df>|cauchy|mixture");
  sim_cmd->add_option("--betas", sim.betas, "Per-subpopulation effects, comma list");
  sim_cmd->add_option("--mu-beta", sim.mu_beta, "Mean effect");
  sim_cmd->add_option("--sigma-beta", sim.sigma_beta, "Effect standard deviation");
  sim_cmd->add_option("--maf", sim.maf, "Minor allele frequency");
  sim_cmd->add_option("--sigma-c", sim.sigma_c, "Covariate noise sd");
  sim_cmd->add_option("--covariates", sim.n_covariates, "Latent-structure covariates");
  sim_cmd->add_option("--confounding", sim.confounding, "Confounded design (true|false)");
  sim_cmd->add_option("--true-kappa", sim.true_kappa, "euclidean|crossprod");
  sim_cmd->add_option("--methods", sim.methods, "e.g. hwu,nhwu,glm,vcscore,hwu:crossprod");
  sim_cmd->add_option("--seed", sim.seed, "Master seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--out", sim.out, "TSV output (default stdout)");

  std::string lambdas, q;
  bool verbose = false;
  auto* pv_cmd = app.add_subcommand("pvalue", "P(sum lambda_k chi2_1 > q)");
  pv_cmd->add_option("--lambdas", lambdas, "Comma list of mixture weights")->required();
  pv_cmd->add_option("--q", q, "Observed value")->required();
  pv_cmd->add_flag("--verbose", verbose, "Report method and fault code");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const hwu::Error& e) {
    std::cerr << "hwu: " << e.what() << '\n';
    return 2;
  }
  std::vector<char*> expanded;
  for (auto& a : args) expanded.push_back(a.data());
  CLI11_PARSE(app, static_cast<int>(expanded.size()), expanded.data());

  try {
    if (*scan_cmd) return run_scan_command(scan);
    if (*sim_cmd) return run_sim_command(sim, *sim_cmd);
    if (*pv_cmd) return run_pvalue_command(lambdas, q, verbose);
  } catch (const hwu::Error& e) {
    std::cerr << "hwu: " << hwu::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hwu: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
