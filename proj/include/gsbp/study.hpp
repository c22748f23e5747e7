#ifndef GSBP_STUDY_HPP_
#define GSBP_STUDY_HPP_

// Convergence and work-precision studies on the convection benchmark.
// Runs over (scheme, h) are independent and execute on a small thread pool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gsbp/convection.hpp"
#include "gsbp/registry.hpp"
#include "gsbp/verify.hpp"

namespace gsbp {

struct StudyConfig {
  int nblocks = 20;
  int nodes_per_block = 5;
  double T = 2.0;
  std::vector<std::string> schemes;  ///< registry names or file:<path>
  std::vector<double> h_values;
  int repetitions = 3;
  int threads = 0;  ///< 0: hardware concurrency; GSBP_THREADS caps either way

  void validate() const {
    if (nblocks < 2) throw InputError("nblocks must be at least 2");
    if (nodes_per_block < 2) throw InputError("nodes_per_block must be at least 2");
    if (!(T > 0.0)) throw InputError("T must be positive");
    if (schemes.empty()) throw InputError("study needs at least one scheme");
    if (h_values.empty()) throw InputError("study needs at least one step size");
    for (double h : h_values)
      if (!(h > 0.0) || !(h <= T)) throw InputError("step sizes must lie in (0, T]");
    if (repetitions < 1) throw InputError("repetitions must be at least 1");
  }
};

inline StudyConfig study_config_from_json(const io::json& doc) {
  if (!doc.is_object()) throw InputError("study config must be an object");
  StudyConfig cfg;
  try {
    cfg.nblocks = doc.value("nblocks", cfg.nblocks);
    cfg.nodes_per_block = doc.value("nodes_per_block", cfg.nodes_per_block);
    cfg.T = doc.value("T", cfg.T);
    cfg.repetitions = doc.value("repetitions", cfg.repetitions);
    cfg.threads = doc.value("threads", cfg.threads);
    if (doc.contains("schemes")) cfg.schemes = doc["schemes"].get<std::vector<std::string>>();
    if (doc.contains("h_values")) cfg.h_values = doc["h_values"].get<std::vector<double>>();
  } catch (const io::json::exception& e) {
    throw InputError(std::string("study config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

struct StudyRow {
  std::string scheme;
  int n = 0;
  int p = 0;
  double h = 0.0;
  double e_stage = std::numeric_limits<double>::quiet_NaN();
  double e_step = std::numeric_limits<double>::quiet_NaN();
  double seconds = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
  long newton_iterations = 0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct SlopeRow {
  std::string scheme;
  int n = 0;
  int p = 0;
  double stage = std::numeric_limits<double>::quiet_NaN();
  double step = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

struct StudyResult {
  StudyConfig config;
  std::vector<StudyRow> rows;  ///< scheme-major, h in config order
  std::vector<SlopeRow> slopes;

  const SlopeRow* slope(const std::string& scheme) const {
    for (const auto& s : slopes)
      if (s.scheme == scheme) return &s;
    return nullptr;
  }
  std::vector<const StudyRow*> rows_of(const std::string& scheme) const {
    std::vector<const StudyRow*> out;
    for (const auto& r : rows)
      if (r.scheme == scheme) out.push_back(&r);
    return out;
  }
};

inline int study_threads(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GSBP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

/// Least-squares slopes over the longest run of consecutive successful
/// h values, when that run has at least four points.
inline SlopeRow fit_slopes(const std::string& scheme, const std::vector<const StudyRow*>& rows) {
  SlopeRow s;
  s.scheme = scheme;
  if (!rows.empty()) {
    s.n = rows.front()->n;
    s.p = rows.front()->p;
  }
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < rows.size();) {
    if (!rows[i]->ok()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < rows.size() && rows[j]->ok()) ++j;
    if (j - i > best_len) {
      best_begin = i;
      best_len = j - i;
    }
    i = j;
  }
  s.points = static_cast<int>(best_len);
  if (best_len < 4) return s;
  std::vector<double> h, es, ep;
  for (std::size_t i = best_begin; i < best_begin + best_len; ++i) {
    h.push_back(rows[i]->h);
    es.push_back(rows[i]->e_stage);
    ep.push_back(rows[i]->e_step);
  }
  if (std::all_of(es.begin(), es.end(), [](double v) { return v > 0.0; })) s.stage = fitted_slope(h, es);
  if (std::all_of(ep.begin(), ep.end(), [](double v) { return v > 0.0; })) s.step = fitted_slope(h, ep);
  return s;
}

/// Runs every (scheme, h) pair. Failures are recorded per row and the
/// study continues; unknown schemes are input errors raised up front.
inline StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult result;
  result.config = cfg;

  std::vector<Scheme<double>> schemes;
  std::vector<int> orders;
  for (const auto& spec : cfg.schemes) {
    schemes.push_back(resolve_scheme(spec));
    schemes.back().name = spec.rfind("file:", 0) == 0 ? schemes.back().name : spec;
    orders.push_back(full_order_conditions(schemes.back().tableau).p_full);
  }
  const SpatialDisc disc = assemble_advection(cfg.nblocks, cfg.nodes_per_block);
  const VecD y0 = sine_state(disc);
  const IvpSpec<double> ivp = disc.ivp(y0, cfg.T);

  const std::size_t nh = cfg.h_values.size();
  result.rows.resize(schemes.size() * nh);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < result.rows.size(); job = next++) {
      const auto& sc = schemes[job / nh];
      StudyRow& row = result.rows[job];
      row.scheme = sc.name;
      row.n = static_cast<int>(sc.tableau.stages());
      row.p = orders[job / nh];
      row.h = cfg.h_values[job % nh];
      try {
        Trajectory<double> traj;
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
          const auto start = std::chrono::steady_clock::now();
          traj = march(sc.tableau, ivp, row.h);
          const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
          best = std::min(best, dt.count());
        }
        ExactSolution exact(disc, y0);
        const auto e = error_measures(disc, traj, stage_weight(sc.tableau, sc.op ? &*sc.op : nullptr), exact);
        row.e_stage = e.e_stage;
        row.e_step = e.e_step;
        row.seconds = best;
        row.steps = traj.steps();
        for (int it : traj.newton_iterations) row.newton_iterations += it;
        if (e.stage_norm_indefinite) row.status = "indefinite-stage-norm";
      } catch (const std::exception& ex) {
        row.status = std::string("failed: ") + ex.what();
      }
    }
  };
  const int nthreads = study_threads(cfg.threads, result.rows.size());
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& sc : schemes) result.slopes.push_back(fit_slopes(sc.name, result.rows_of(sc.name)));
  return result;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string csv_real(double v) { return std::isnan(v) ? "" : format_double(v); }

}  // namespace detail

/// One row per run, then one "slope" row per scheme (h column = "slope",
/// error columns hold the fitted slopes).
inline std::string study_csv(const StudyResult& r, bool with_timing = true) {
  std::ostringstream out;
  out << "scheme,n,p,h,e_stage,e_step,seconds,steps,newton_iterations,status\n";
  for (const auto& row : r.rows)
    out << detail::csv_field(row.scheme) << ',' << row.n << ',' << row.p << ',' << format_double(row.h)
        << ',' << detail::csv_real(row.e_stage) << ',' << detail::csv_real(row.e_step) << ','
        << (with_timing ? detail::csv_real(row.seconds) : "") << ',' << row.steps << ','
        << row.newton_iterations << ',' << detail::csv_field(row.status) << '\n';
  for (const auto& s : r.slopes)
    out << detail::csv_field(s.scheme) << ',' << s.n << ',' << s.p << ",slope,"
        << detail::csv_real(s.stage) << ',' << detail::csv_real(s.step) << ",," << s.points << ",,"
        << (std::isnan(s.step) ? "too-few-points" : "ok") << '\n';
  return out.str();
}

/// gnuplot data: one index block per scheme, columns seconds e_stage e_step h.
inline std::string work_precision_dat(const StudyResult& r) {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : r.slopes) {
    if (!first) out << "\n\n";
    first = false;
    out << "# " << s.scheme << " (n=" << s.n << ", p=" << s.p << ")\n";
    out << "# seconds e_stage e_step h\n";
    for (const auto* row : r.rows_of(s.scheme)) {
      if (!row->ok()) continue;
      out << format_double(row->seconds) << ' ' << format_double(row->e_stage) << ' '
          << format_double(row->e_step) << ' ' << format_double(row->h) << '\n';
    }
  }
  return out.str();
}

/// Work-precision comparison at equal error. Each fast scheme's cost is
/// modeled by a least-squares line of log(seconds) against log(e_step);
/// for every run of a slow scheme the model cost at that run's error must
/// be below the run's measured cost.
struct EfficiencyComparison {
  bool ordered = true;
  int comparisons = 0;
  double worst_ratio = 0.0;  ///< max over runs of model fast cost / slow cost
};

inline EfficiencyComparison compare_efficiency(const StudyResult& r, const std::vector<std::string>& fast,
                                               const std::vector<std::string>& slow) {
  EfficiencyComparison cmp;
  for (const auto& f : fast) {
    std::vector<double> le, lt;
    for (const auto* row : r.rows_of(f))
      if (row->ok() && row->e_step > 0.0) {
        le.push_back(std::log(row->e_step));
        lt.push_back(std::log(row->seconds));
      }
    if (le.size() < 2) throw InputError("efficiency model for '" + f + "' needs two runs");
    const double n = static_cast<double>(le.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < le.size(); ++i) {
      sx += le[i];
      sy += lt[i];
      sxx += le[i] * le[i];
      sxy += le[i] * lt[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    for (const auto& s : slow)
      for (const auto* row : r.rows_of(s)) {
        if (!row->ok() || !(row->e_step > 0.0)) continue;
        const double model = std::exp(icpt + slope * std::log(row->e_step));
        const double ratio = model / row->seconds;
        cmp.worst_ratio = std::max(cmp.worst_ratio, ratio);
        cmp.ordered = cmp.ordered && ratio < 1.0;
        ++cmp.comparisons;
      }
  }
  if (cmp.comparisons == 0) cmp.ordered = false;
  return cmp;
}

}  // namespace gsbp

#endif  // GSBP_STUDY_HPP_
