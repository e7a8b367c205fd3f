#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hwu/rank_kernel.hpp"
#include "hwu/types.hpp"
#include "hwu/weights.hpp"

namespace hwu {

struct VariantRecord {
  std::string id;
  std::string chrom;
  std::int64_t pos = 0;
  /// One dosage per sample; NaN marks a missing call.
  Vector dosage;
};

struct GenotypeTable {
  std::vector<std::string> samples;
  std::vector<VariantRecord> variants;
};

/// Reads the tab-separated variant-major genotype format:
///   #samples<TAB>id1<TAB>...<TAB>idn
///   variant_id<TAB>chrom<TAB>pos<TAB>d1<TAB>...<TAB>dn
/// with dosages 0, 1, 2 or NA.
GenotypeTable read_genotypes(const std::filesystem::path& path);

struct LoadOptions {
  std::filesystem::path genotypes;
  std::filesystem::path phenotype;
  /// Optional adjustment covariates: header line, then sample_id<TAB>c1...
  std::optional<std::filesystem::path> covariates;
  /// euclidean:<covfile> | crossprod:<covfile> | ibs:<genofile> | constant |
  /// file:<matrix>. A file: matrix is indexed in genotype-file sample order.
  std::string kappa = "constant";
};

struct LoadReport {
  std::size_t genotype_samples = 0;
  std::size_t phenotype_samples = 0;
  std::size_t missing_phenotype = 0;
  std::size_t used_samples = 0;
  std::size_t imputed_dosages = 0;
};

struct ScanInputs {
  /// Subset to the analysis samples, in phenotype-file order, imputed.
  GenotypeTable genotypes;
  Vector phenotype;
  CovariateMatrix covariates;
  KappaMatrix kappa;
  LoadReport report;
};

ScanInputs load_inputs(const LoadOptions& options);

enum class ScanStatus {
  ok,
  skipped_monomorphic,
  skipped_degenerate,
  fallback_moment_match,
  failed,
};

std::string_view to_string(ScanStatus status) noexcept;
ScanStatus parse_scan_status(std::string_view text);

struct ScanRecord {
  std::string variant_id;
  std::string chrom;
  std::int64_t pos = 0;
  Index n_used = 0;
  /// Statistic of the first requested mode.
  std::optional<double> u;
  std::optional<double> p_hwu;
  std::optional<double> p_nhwu;
  std::optional<double> p_phwu;
  /// Permutation p-value of the first requested mode, when requested.
  std::optional<double> p_perm;
  ScanStatus status = ScanStatus::ok;

  bool operator==(const ScanRecord&) const = default;
};

struct ScanOptions {
  std::vector<WeightMode> modes = {WeightMode::hwu};
  GsimKind gsim = GsimKind::crossprod;
  /// 0 disables the permutation test.
  int permutations = 0;
  std::uint64_t seed = 1;
  /// 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct ScanSummary {
  std::size_t records = 0;
  std::size_t ok = 0;
  std::size_t skipped = 0;
  std::size_t fallback = 0;
  std::size_t failed = 0;
};

/// Tests every variant and passes the records to `sink` in input order,
/// whatever the thread count.
ScanSummary run_scan(const ScanInputs& inputs, const ScanOptions& options,
                     const std::function<void(const ScanRecord&)>& sink);

std::vector<ScanRecord> run_scan(const ScanInputs& inputs, const ScanOptions& options);

/// Six-significant-digit scientific notation, e.g. 1.93000e-08.
std::string format_sci(double value);

/// Streams records to a tab-separated file. Output goes to a temporary file
/// that replaces `path` on commit(); an uncommitted writer removes it.
class ResultWriter {
 public:
  explicit ResultWriter(std::filesystem::path path);
  ~ResultWriter();
  ResultWriter(const ResultWriter&) = delete;
  ResultWriter& operator=(const ResultWriter&) = delete;

  void write(const ScanRecord& record);
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

ScanSummary write_results(const std::vector<ScanRecord>& records,
                          const std::filesystem::path& path);

std::vector<ScanRecord> read_results(const std::filesystem::path& path);

inline constexpr std::string_view kResultHeader =
    "variant_id\tchrom\tpos\tn_used\tU\tp_hwu\tp_nhwu\tp_phwu\tp_perm\tstatus";

}  // namespace hwu
