#include "hwu/scan.hpp"

#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "hwu/engine.hpp"
#include "hwu/rng.hpp"
#include "hwu/errors.hpp"
#include "parallel.hpp"

namespace hwu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& msg) {
  throw Error(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + msg);
}

std::optional<double> parse_number(std::string_view text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return in;
}

// sample_id<TAB>v1<TAB>...; values may be NA. Rows with any NA are reported
// as missing.
struct SampleTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;  // empty row = missing
  std::size_t columns = 0;
};

SampleTable read_sample_table(const std::filesystem::path& path, bool header_required) {
  std::ifstream in = open_input(path);
  SampleTable table;
  std::unordered_set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (first) {
      first = false;
      const bool looks_like_header = line.front() == '#' || fields[0] == "sample_id";
      if (header_required || looks_like_header) {
        table.columns = fields.size() - 1;
        continue;
      }
      table.columns = fields.size() - 1;
    }
    if (fields.size() < 2) parse_fail(path, line_no, "expected sample id and at least one value");
    if (fields.size() - 1 != table.columns) {
      parse_fail(path, line_no, "expected " + std::to_string(table.columns) + " values, found " +
                                    std::to_string(fields.size() - 1));
    }
    std::string id(fields[0]);
    if (!seen.insert(id).second) parse_fail(path, line_no, "duplicate sample id '" + id + "'");
    std::vector<double> row;
    bool missing = false;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c] == "NA") {
        missing = true;
        continue;
      }
      const auto v = parse_number(fields[c]);
      if (!v) parse_fail(path, line_no, "bad number '" + std::string(fields[c]) + "'");
      row.push_back(*v);
    }
    if (missing) row.clear();
    table.ids.push_back(std::move(id));
    table.rows.push_back(std::move(row));
  }
  if (header_required && first) parse_fail(path, 1, "missing header line");
  return table;
}

Matrix select_rows(const SampleTable& table, const std::vector<std::string>& samples) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.ids.size(); ++i) index.emplace(table.ids[i], i);
  Matrix out(static_cast<Index>(samples.size()), static_cast<Index>(table.columns));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& row = table.rows[index.at(samples[s])];
    for (std::size_t c = 0; c < table.columns; ++c) out(static_cast<Index>(s), static_cast<Index>(c)) = row[c];
  }
  return out;
}

std::set<std::string> present_ids(const SampleTable& table) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!table.rows[i].empty()) ids.insert(table.ids[i]);
  }
  return ids;
}

Matrix genotype_matrix(const GenotypeTable& table, const std::vector<std::string>& samples) {
  std::unordered_map<std::string, Index> index;
  for (std::size_t i = 0; i < table.samples.size(); ++i) index.emplace(table.samples[i], static_cast<Index>(i));
  Matrix out(static_cast<Index>(samples.size()), static_cast<Index>(table.variants.size()));
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      out(static_cast<Index>(s), static_cast<Index>(v)) = table.variants[v].dosage[index.at(samples[s])];
    }
  }
  return out;
}

}  // namespace

GenotypeTable read_genotypes(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  GenotypeTable table;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (!have_header) {
      if (fields[0] != "#samples") parse_fail(path, line_no, "expected '#samples' header");
      std::unordered_set<std::string> seen;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        std::string id(fields[i]);
        if (!seen.insert(id).second) parse_fail(path, line_no, "duplicate sample id '" + id + "'");
        table.samples.push_back(std::move(id));
      }
      have_header = true;
      continue;
    }
    const std::size_t n = table.samples.size();
    if (fields.size() != n + 3) {
      parse_fail(path, line_no, "expected " + std::to_string(n + 3) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    VariantRecord rec;
    rec.id = std::string(fields[0]);
    rec.chrom = std::string(fields[1]);
    {
      const auto f = fields[2];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), rec.pos);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        parse_fail(path, line_no, "bad position '" + std::string(f) + "'");
      }
    }
    rec.dosage.resize(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = fields[i + 3];
      double d = 0.0;
      if (f == "0") d = 0.0;
      else if (f == "1") d = 1.0;
      else if (f == "2") d = 2.0;
      else if (f == "NA") d = kNaN;
      else parse_fail(path, line_no, "invalid dosage '" + std::string(f) + "' for variant " + rec.id);
      rec.dosage[static_cast<Index>(i)] = d;
    }
    table.variants.push_back(std::move(rec));
  }
  if (!have_header) parse_fail(path, line_no, "missing '#samples' header");
  return table;
}

ScanInputs load_inputs(const LoadOptions& options) {
  GenotypeTable geno = read_genotypes(options.genotypes);
  const SampleTable pheno = read_sample_table(options.phenotype, false);
  if (pheno.columns != 1) {
    throw Error(ErrorCode::parse_error, options.phenotype.string() + ": expected sample_id<TAB>value");
  }

  LoadReport report;
  report.genotype_samples = geno.samples.size();
  report.phenotype_samples = pheno.ids.size();

  std::set<std::string> allowed(geno.samples.begin(), geno.samples.end());
  auto restrict_to = [&](const std::set<std::string>& ids) {
    std::set<std::string> kept;
    for (const auto& id : allowed) {
      if (ids.count(id)) kept.insert(id);
    }
    allowed = std::move(kept);
  };

  std::optional<SampleTable> covariates;
  if (options.covariates) {
    covariates = read_sample_table(*options.covariates, true);
    restrict_to(present_ids(*covariates));
  }

  // kappa source
  const std::string& spec = options.kappa;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  std::optional<SampleTable> kappa_cov;
  std::optional<GenotypeTable> kappa_geno;
  if (kind == "euclidean" || kind == "crossprod") {
    if (arg.empty()) throw Error(ErrorCode::invalid_parameter, "--kappa " + kind + " needs a covariate file");
    kappa_cov = read_sample_table(arg, true);
    restrict_to(present_ids(*kappa_cov));
  } else if (kind == "ibs") {
    if (arg.empty()) throw Error(ErrorCode::invalid_parameter, "--kappa ibs needs a genotype file");
    kappa_geno = read_genotypes(arg);
    restrict_to(std::set<std::string>(kappa_geno->samples.begin(), kappa_geno->samples.end()));
  } else if (kind != "constant" && kind != "file") {
    throw Error(ErrorCode::invalid_parameter, "unknown kappa source '" + spec + "'");
  }

  std::vector<std::string> samples;
  std::vector<double> y;
  for (std::size_t i = 0; i < pheno.ids.size(); ++i) {
    if (pheno.rows[i].empty()) {
      ++report.missing_phenotype;
      continue;
    }
    if (allowed.count(pheno.ids[i])) {
      samples.push_back(pheno.ids[i]);
      y.push_back(pheno.rows[i][0]);
    }
  }
  if (samples.size() < 3) {
    throw Error(ErrorCode::invalid_input,
                "only " + std::to_string(samples.size()) + " samples overlap across the inputs");
  }
  report.used_samples = samples.size();
  const auto n = static_cast<Index>(samples.size());

  Matrix cov = covariates ? select_rows(*covariates, samples) : Matrix(n, 0);

  KappaMatrix kappa;
  if (kind == "euclidean") {
    kappa = kappa_euclidean(select_rows(*kappa_cov, samples));
  } else if (kind == "crossprod") {
    kappa = kappa_crossprod(select_rows(*kappa_cov, samples));
  } else if (kind == "ibs") {
    kappa = kappa_ibs(genotype_matrix(*kappa_geno, samples));
  } else if (kind == "file") {
    const KappaMatrix full = load_kappa(arg);
    if (full.size() != static_cast<Index>(geno.samples.size())) {
      throw Error(ErrorCode::invalid_input, "kappa matrix size does not match genotype sample count");
    }
    std::unordered_map<std::string, Index> index;
    for (std::size_t i = 0; i < geno.samples.size(); ++i) index.emplace(geno.samples[i], static_cast<Index>(i));
    Matrix sub(n, n);
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) sub(a, b) = full.entries(index.at(samples[a]), index.at(samples[b]));
    }
    kappa = kappa_precomputed(std::move(sub));
  } else {
    kappa = kappa_constant(n);
  }

  GenotypeTable subset;
  subset.samples = samples;
  {
    std::unordered_map<std::string, Index> index;
    for (std::size_t i = 0; i < geno.samples.size(); ++i) index.emplace(geno.samples[i], static_cast<Index>(i));
    std::vector<Index> cols;
    cols.reserve(samples.size());
    for (const auto& s : samples) cols.push_back(index.at(s));
    subset.variants.reserve(geno.variants.size());
    for (auto& v : geno.variants) {
      VariantRecord rec{std::move(v.id), std::move(v.chrom), v.pos, Vector(n)};
      for (Index s = 0; s < n; ++s) rec.dosage[s] = v.dosage[cols[static_cast<std::size_t>(s)]];
      report.imputed_dosages += impute_mean(std::span<double>(rec.dosage.data(), static_cast<std::size_t>(n)));
      subset.variants.push_back(std::move(rec));
    }
  }

  return ScanInputs{std::move(subset), Eigen::Map<const Vector>(y.data(), n),
                    CovariateMatrix::with_intercept(cov), std::move(kappa), report};
}

std::string_view to_string(ScanStatus status) noexcept {
  switch (status) {
    case ScanStatus::ok: return "ok";
    case ScanStatus::skipped_monomorphic: return "skipped_monomorphic";
    case ScanStatus::skipped_degenerate: return "skipped_degenerate";
    case ScanStatus::fallback_moment_match: return "fallback_moment_match";
    case ScanStatus::failed: return "failed";
  }
  return "unknown";
}

ScanStatus parse_scan_status(std::string_view text) {
  for (auto s : {ScanStatus::ok, ScanStatus::skipped_monomorphic, ScanStatus::skipped_degenerate,
                 ScanStatus::fallback_moment_match, ScanStatus::failed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::parse_error, "unknown status '" + std::string(text) + "'");
}

namespace {

bool is_degenerate(const Error& e) {
  return e.code() == ErrorCode::degenerate_weight || e.code() == ErrorCode::degenerate_phenotype;
}

ScanRecord test_variant(const ScanInputs& inputs, const std::optional<StandardizedScores>& scores,
                        const ScanOptions& options, std::size_t index) {
  const VariantRecord& v = inputs.genotypes.variants[index];
  ScanRecord rec;
  rec.variant_id = v.id;
  rec.chrom = v.chrom;
  rec.pos = v.pos;
  rec.n_used = v.dosage.size();

  if (v.dosage.maxCoeff() == v.dosage.minCoeff()) {
    rec.status = ScanStatus::skipped_monomorphic;
    return rec;
  }
  if (!scores) {
    rec.status = ScanStatus::skipped_degenerate;
    return rec;
  }
  try {
    const GeneticSimilarity gs = GeneticSimilarity::single(v.dosage, options.gsim);
    bool fallback = false;
    for (std::size_t m = 0; m < options.modes.size(); ++m) {
      const WeightMode mode = options.modes[m];
      std::optional<double> p;
      try {
        const WeightMatrix w = compose_weight(inputs.kappa, gs, mode);
        const AssociationResult res = asymptotic_test(*scores, inputs.covariates, w);
        p = res.p_asymptotic.value;
        fallback = fallback || res.used_fallback;
        if (m == 0) {
          rec.u = res.u_stat;
          if (options.permutations > 0) {
            const PermutationConfig cfg{options.permutations, stream_seed(options.seed, index)};
            rec.p_perm = permutation_test(*scores, w, cfg).value;
          }
        }
      } catch (const Error& e) {
        if (!is_degenerate(e)) throw;
        if (m == 0) {
          ScanRecord skipped;
          skipped.variant_id = rec.variant_id;
          skipped.chrom = rec.chrom;
          skipped.pos = rec.pos;
          skipped.n_used = rec.n_used;
          skipped.status = ScanStatus::skipped_degenerate;
          return skipped;
        }
      }
      switch (mode) {
        case WeightMode::hwu: rec.p_hwu = p; break;
        case WeightMode::nhwu: rec.p_nhwu = p; break;
        case WeightMode::phwu: rec.p_phwu = p; break;
      }
    }
    rec.status = fallback ? ScanStatus::fallback_moment_match : ScanStatus::ok;
  } catch (const std::exception&) {
    ScanRecord failed;
    failed.variant_id = rec.variant_id;
    failed.chrom = rec.chrom;
    failed.pos = rec.pos;
    failed.n_used = rec.n_used;
    failed.status = ScanStatus::failed;
    return failed;
  }
  return rec;
}

// Fixed-capacity FIFO shared by the producer and the workers.
class WorkQueue {
 public:
  explicit WorkQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(std::size_t item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(item);
    not_empty_.notify_one();
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

  std::optional<std::size_t> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    const std::size_t item = items_.front();
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

 private:
  std::size_t capacity_;
  std::deque<std::size_t> items_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
};

}  // namespace

ScanSummary run_scan(const ScanInputs& inputs, const ScanOptions& options,
                     const std::function<void(const ScanRecord&)>& sink) {
  if (options.modes.empty()) throw Error(ErrorCode::invalid_parameter, "no weight modes requested");
  if (options.permutations != 0 && options.permutations < 100) {
    throw Error(ErrorCode::invalid_parameter, "at least 100 permutations are required");
  }
  std::optional<StandardizedScores> scores;
  try {
    scores = rank_scores(inputs.phenotype, inputs.covariates);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_phenotype) throw;
  }

  const std::size_t total = inputs.genotypes.variants.size();
  const unsigned threads = detail::resolve_threads(options.threads);
  ScanSummary summary;

  auto account = [&](const ScanRecord& rec) {
    ++summary.records;
    switch (rec.status) {
      case ScanStatus::ok: ++summary.ok; break;
      case ScanStatus::fallback_moment_match: ++summary.fallback; break;
      case ScanStatus::failed: ++summary.failed; break;
      default: ++summary.skipped; break;
    }
    sink(rec);
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < total; ++i) account(test_variant(inputs, scores, options, i));
    return summary;
  }

  WorkQueue queue(2 * static_cast<std::size_t>(threads));
  std::mutex done_mutex;
  std::condition_variable done_cv;
  std::map<std::size_t, ScanRecord> done;

  std::vector<std::jthread> workers;
  workers.reserve(threads + 1);
  workers.emplace_back([&] {
    for (std::size_t i = 0; i < total; ++i) queue.push(i);
    queue.close();
  });
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      while (const auto item = queue.pop()) {
        ScanRecord rec = test_variant(inputs, scores, options, *item);
        std::lock_guard lock(done_mutex);
        done.emplace(*item, std::move(rec));
        done_cv.notify_one();
      }
    });
  }

  // sequencer: emit strictly in input order
  for (std::size_t next = 0; next < total; ++next) {
    ScanRecord rec;
    {
      std::unique_lock lock(done_mutex);
      done_cv.wait(lock, [&] { return done.count(next) > 0; });
      auto it = done.find(next);
      rec = std::move(it->second);
      done.erase(it);
    }
    account(rec);
  }
  return summary;
}

std::vector<ScanRecord> run_scan(const ScanInputs& inputs, const ScanOptions& options) {
  std::vector<ScanRecord> out;
  out.reserve(inputs.genotypes.variants.size());
  run_scan(inputs, options, [&](const ScanRecord& r) { out.push_back(r); });
  return out;
}

std::string format_sci(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, 5);
  if (ec != std::errc()) throw Error(ErrorCode::io_error, "cannot format number");
  return std::string(buf, ptr);
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? format_sci(*v) : std::string("NA");
}

}  // namespace

ResultWriter::ResultWriter(std::filesystem::path path) : path_(std::move(path)) {
  tmp_ = path_;
  tmp_ += ".partial";
  out_.open(tmp_, std::ios::out | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::io_error, "cannot open " + tmp_.string() + " for writing");
  out_ << kResultHeader << '\n';
}

ResultWriter::~ResultWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void ResultWriter::write(const ScanRecord& r) {
  out_ << r.variant_id << '\t' << r.chrom << '\t' << r.pos << '\t' << r.n_used << '\t'
       << format_optional(r.u) << '\t' << format_optional(r.p_hwu) << '\t'
       << format_optional(r.p_nhwu) << '\t' << format_optional(r.p_phwu) << '\t'
       << format_optional(r.p_perm) << '\t' << to_string(r.status) << '\n';
  if (!out_) throw Error(ErrorCode::io_error, "write to " + tmp_.string() + " failed");
}

void ResultWriter::commit() {
  out_.flush();
  out_.close();
  if (!out_) throw Error(ErrorCode::io_error, "closing " + tmp_.string() + " failed");
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot move results into " + path_.string() + ": " + ec.message());
  committed_ = true;
}

ScanSummary write_results(const std::vector<ScanRecord>& records,
                          const std::filesystem::path& path) {
  ResultWriter writer(path);
  ScanSummary summary;
  for (const auto& r : records) {
    writer.write(r);
    ++summary.records;
    switch (r.status) {
      case ScanStatus::ok: ++summary.ok; break;
      case ScanStatus::fallback_moment_match: ++summary.fallback; break;
      case ScanStatus::failed: ++summary.failed; break;
      default: ++summary.skipped; break;
    }
  }
  writer.commit();
  return summary;
}

std::vector<ScanRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string raw;
  std::size_t line_no = 0;
  std::vector<ScanRecord> out;
  auto opt = [&](std::string_view f) -> std::optional<double> {
    if (f == "NA") return std::nullopt;
    const auto v = parse_number(f);
    if (!v) parse_fail(path, line_no, "bad number '" + std::string(f) + "'");
    return v;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line_no == 1) {
      if (line != kResultHeader) parse_fail(path, line_no, "unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 10) parse_fail(path, line_no, "expected 10 fields");
    ScanRecord r;
    r.variant_id = std::string(f[0]);
    r.chrom = std::string(f[1]);
    std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.pos);
    std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.n_used);
    r.u = opt(f[4]);
    r.p_hwu = opt(f[5]);
    r.p_nhwu = opt(f[6]);
    r.p_phwu = opt(f[7]);
    r.p_perm = opt(f[8]);
    r.status = parse_scan_status(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hwu
