#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dilemma/coding.hpp"

namespace dilemma {

struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Display --------------------------------------------------------------------

// Rounds half away from zero at `decimals` places: 81.25 -> "81.3". A small
// relative nudge keeps values such as 0.0294999... computed from ratios on the
// intended side.
inline std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::abs(value) * scale;
  const double rounded = std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, scaled));
  const double out = std::copysign(rounded / scale, value);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, out == 0.0 ? 0.0 : out);
  return buf;
}

inline double round_to(double value, int decimals) { return std::stod(format_fixed(value, decimals)); }

// Incidence ------------------------------------------------------------------

struct CellCount {
  std::string model_id;
  Treatment treatment = Treatment::Baseline;
  int games = 0;
  int wars = 0;

  double rate_pct() const { return games == 0 ? 0.0 : 100.0 * wars / games; }
};

struct Rate {
  int games = 0;
  int wars = 0;

  // Absent for an empty group, never 0/0.
  std::optional<double> pct() const {
    if (games == 0) return std::nullopt;
    return 100.0 * wars / games;
  }
};

struct IncidenceTable {
  std::vector<std::string> models;  // sorted
  std::map<std::pair<std::string, Treatment>, CellCount> cells;
  std::array<Rate, 4> by_treatment{};
  std::map<std::string, Rate> by_model;
  Rate overall;

  std::optional<double> cell_pct(const std::string& model, Treatment t) const {
    auto it = cells.find({model, t});
    if (it == cells.end() || it->second.games == 0) return std::nullopt;
    return it->second.rate_pct();
  }
  std::optional<double> treatment_pct(Treatment t) const { return by_treatment[index_of(t)].pct(); }
  std::optional<double> model_pct(const std::string& m) const {
    auto it = by_model.find(m);
    return it == by_model.end() ? std::nullopt : it->second.pct();
  }
};

inline std::vector<std::string> model_ids(std::span<const OutcomeRecord> outcomes) {
  std::set<std::string> s;
  for (const auto& o : outcomes) s.insert(o.model_id);
  return {s.begin(), s.end()};
}

inline IncidenceTable incidence_table(std::span<const OutcomeRecord> outcomes) {
  if (outcomes.empty()) throw ConfigError("incidence table needs at least one outcome");
  IncidenceTable t;
  t.models = model_ids(outcomes);
  for (const auto& o : outcomes) {
    auto& cell = t.cells[{o.model_id, o.treatment}];
    cell.model_id = o.model_id;
    cell.treatment = o.treatment;
    ++cell.games;
    auto& tr = t.by_treatment[index_of(o.treatment)];
    auto& mr = t.by_model[o.model_id];
    ++tr.games;
    ++mr.games;
    ++t.overall.games;
    if (o.war_started) {
      ++cell.wars;
      ++tr.wars;
      ++mr.wars;
      ++t.overall.wars;
    }
  }
  return t;
}

// Timing ---------------------------------------------------------------------

struct TimingStats {
  int war_games = 0;
  std::optional<double> mean_peaceful_periods;  // over war games only
  std::vector<int> war_period_histogram = std::vector<int>(kPaperMaxPeriods, 0);  // [0] = period 1
};

inline std::array<TimingStats, 4> timing_stats(std::span<const OutcomeRecord> outcomes) {
  std::array<TimingStats, 4> out{};
  std::array<long, 4> sums{};
  for (const auto& o : outcomes) {
    if (!o.war_started) continue;
    const auto i = index_of(o.treatment);
    auto& s = out[i];
    ++s.war_games;
    sums[i] += o.peaceful_periods_before_war.value_or(*o.war_period - 1);
    const auto p = static_cast<std::size_t>(*o.war_period);
    if (p > s.war_period_histogram.size()) s.war_period_histogram.resize(p, 0);
    ++s.war_period_histogram[p - 1];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (out[i].war_games > 0) {
      out[i].mean_peaceful_periods = static_cast<double>(sums[i]) / out[i].war_games;
    }
  }
  return out;
}

// Attack structure -----------------------------------------------------------

struct StructureCounts {
  int unilateral = 0;
  int simultaneous_2 = 0;
  int simultaneous_3 = 0;

  int simultaneous() const { return simultaneous_2 + simultaneous_3; }
  int wars() const { return unilateral + simultaneous(); }
};

inline std::array<StructureCounts, 4> attack_structure_table(std::span<const OutcomeRecord> outcomes) {
  std::array<StructureCounts, 4> out{};
  for (const auto& o : outcomes) {
    auto& s = out[index_of(o.treatment)];
    switch (o.attack_structure) {
      case AttackStructure::Unilateral: ++s.unilateral; break;
      case AttackStructure::Simultaneous2: ++s.simultaneous_2; break;
      case AttackStructure::Simultaneous3: ++s.simultaneous_3; break;
      case AttackStructure::None: break;
    }
  }
  return out;
}

// Linear probability model ---------------------------------------------------

enum class Covariance : std::uint8_t { HC0, HC1, HC2, HC3 };

inline constexpr std::array<Covariance, 4> kAllCovariances{Covariance::HC0, Covariance::HC1,
                                                           Covariance::HC2, Covariance::HC3};

inline constexpr std::string_view to_string(Covariance c) noexcept {
  switch (c) {
    case Covariance::HC0: return "HC0";
    case Covariance::HC1: return "HC1";
    case Covariance::HC2: return "HC2";
    case Covariance::HC3: return "HC3";
  }
  return "HC1";
}

inline Covariance parse_covariance(std::string_view s) {
  for (auto c : kAllCovariances) {
    std::string lower(to_string(c));
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == to_string(c) || s == lower) return c;
  }
  throw ConfigError("unknown covariance '" + std::string(s) + "'");
}

struct RegressionSpec {
  Covariance covariance = Covariance::HC1;
  std::optional<std::string> reference_model;  // first model id when absent
};

struct RegressionResult {
  std::vector<std::string> names;  // "(intercept)", treatment names, "model:<id>"
  Eigen::VectorXd coefficients;
  std::array<Eigen::VectorXd, 4> robust_se;  // indexed by Covariance
  Covariance covariance = Covariance::HC1;
  double r_squared = 0;
  std::size_t n = 0;
  std::size_t models = 0;
  std::string reference_model;
  Treatment reference_treatment = Treatment::Baseline;
  std::optional<std::string> warning;
  Eigen::VectorXd residuals;

  const Eigen::VectorXd& se() const { return robust_se[static_cast<std::size_t>(covariance)]; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  }
  std::optional<double> coefficient(const std::string& name) const {
    auto i = index_of(name);
    if (!i) return std::nullopt;
    return coefficients[static_cast<Eigen::Index>(*i)];
  }
  std::optional<double> standard_error(const std::string& name, Covariance c) const {
    auto i = index_of(name);
    if (!i) return std::nullopt;
    return robust_se[static_cast<std::size_t>(c)][static_cast<Eigen::Index>(*i)];
  }
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::string reference_model;
  Treatment reference_treatment = Treatment::Baseline;
  std::size_t models = 0;
};

// Intercept, one indicator per non-reference treatment present, one per
// non-reference model. Baseline is the treatment reference when present.
inline Design lpm_design(std::span<const OutcomeRecord> outcomes, const RegressionSpec& spec) {
  if (outcomes.empty()) throw ConfigError("regression needs at least one outcome");
  Design d;
  const auto models = model_ids(outcomes);
  d.models = models.size();
  d.reference_model = spec.reference_model.value_or(models.front());
  if (std::find(models.begin(), models.end(), d.reference_model) == models.end()) {
    throw ConfigError("reference model '" + d.reference_model + "' not in data");
  }
  std::set<Treatment> present;
  for (const auto& o : outcomes) present.insert(o.treatment);
  d.reference_treatment = *present.begin();

  std::vector<Treatment> tcols;
  for (Treatment t : kAllTreatments) {
    if (present.contains(t) && t != d.reference_treatment) tcols.push_back(t);
  }
  std::vector<std::string> mcols;
  for (const auto& m : models) {
    if (m != d.reference_model) mcols.push_back(m);
  }

  d.names.push_back("(intercept)");
  for (Treatment t : tcols) d.names.emplace_back(to_string(t));
  for (const auto& m : mcols) d.names.push_back("model:" + m);

  const auto n = static_cast<Eigen::Index>(outcomes.size());
  const auto k = static_cast<Eigen::Index>(d.names.size());
  d.x = Eigen::MatrixXd::Zero(n, k);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    d.y[i] = o.war_started ? 1.0 : 0.0;
    d.x(i, 0) = 1.0;
    for (std::size_t j = 0; j < tcols.size(); ++j) {
      if (o.treatment == tcols[j]) d.x(i, static_cast<Eigen::Index>(1 + j)) = 1.0;
    }
    for (std::size_t j = 0; j < mcols.size(); ++j) {
      if (o.model_id == mcols[j]) d.x(i, static_cast<Eigen::Index>(1 + tcols.size() + j)) = 1.0;
    }
  }
  return d;
}

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  std::array<Eigen::VectorXd, 4> robust_se;
};

// OLS through column-pivoted Householder QR, with HC0-HC3 sandwich errors.
inline OlsFit ols_robust(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (n <= k) throw SingularDesignError("need more observations than regressors");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!cols.empty()) cols += ", ";
      cols += names.at(static_cast<std::size_t>(perm[j]));
    }
    throw SingularDesignError("design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(k) +
                              "); collinear column(s): " + cols);
  }

  OlsFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - x * fit.beta;

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r =
      qr.matrixQR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd bread = perm * (r_inv * r_inv.transpose()) * perm.transpose();

  // Leverages h_ii = x_i' (X'X)^-1 x_i.
  const Eigen::VectorXd leverage = ((x * bread).cwiseProduct(x)).rowwise().sum();
  const Eigen::ArrayXd e2 = fit.residuals.array().square();
  const double dof_scale = static_cast<double>(n) / static_cast<double>(n - k);

  for (auto c : kAllCovariances) {
    Eigen::ArrayXd w;
    switch (c) {
      case Covariance::HC0: w = e2; break;
      case Covariance::HC1: w = e2 * dof_scale; break;
      case Covariance::HC2: w = e2 / (1.0 - leverage.array()); break;
      case Covariance::HC3: w = e2 / (1.0 - leverage.array()).square(); break;
    }
    const Eigen::MatrixXd meat = x.transpose() * w.matrix().asDiagonal() * x;
    const Eigen::MatrixXd v = bread * meat * bread;
    fit.robust_se[static_cast<std::size_t>(c)] = v.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

inline RegressionResult fit_lpm(std::span<const OutcomeRecord> outcomes,
                                const RegressionSpec& spec = {}) {
  const auto d = lpm_design(outcomes, spec);
  const auto fit = ols_robust(d.x, d.y, d.names);

  RegressionResult r;
  r.names = d.names;
  r.coefficients = fit.beta;
  r.robust_se = fit.robust_se;
  r.covariance = spec.covariance;
  r.n = outcomes.size();
  r.models = d.models;
  r.reference_model = d.reference_model;
  r.reference_treatment = d.reference_treatment;
  r.residuals = fit.residuals;

  const double rss = fit.residuals.squaredNorm();
  const double tss = (d.y.array() - d.y.mean()).square().sum();
  if (tss == 0.0) {
    r.r_squared = 0.0;
    r.warning = "outcome is constant (TSS = 0); R-squared reported as 0";
  } else {
    r.r_squared = std::clamp(1.0 - rss / tss, 0.0, 1.0);
  }
  return r;
}

// Robustness -----------------------------------------------------------------

// Percentage-point difference of each treatment from the model's own baseline.
// Models without a baseline cell have no row.
inline std::map<std::string, std::array<std::optional<double>, 4>> within_model_deltas(
    std::span<const OutcomeRecord> outcomes) {
  const auto table = incidence_table(outcomes);
  std::map<std::string, std::array<std::optional<double>, 4>> out;
  for (const auto& m : table.models) {
    const auto base = table.cell_pct(m, Treatment::Baseline);
    if (!base) continue;
    auto& row = out[m];
    for (Treatment t : kAllTreatments) {
      if (auto v = table.cell_pct(m, t)) row[index_of(t)] = *v - *base;
    }
  }
  return out;
}

// Pooled treatment rates with each model's games removed in turn.
inline std::map<std::string, std::array<std::optional<double>, 4>> leave_one_model_out(
    std::span<const OutcomeRecord> outcomes) {
  const auto models = model_ids(outcomes);
  if (models.size() < 2) throw ConfigError("leave-one-model-out needs at least two models");
  std::map<std::string, std::array<std::optional<double>, 4>> out;
  for (const auto& omitted : models) {
    std::array<Rate, 4> rates{};
    for (const auto& o : outcomes) {
      if (o.model_id == omitted) continue;
      auto& r = rates[index_of(o.treatment)];
      ++r.games;
      if (o.war_started) ++r.wars;
    }
    auto& row = out[omitted];
    for (std::size_t i = 0; i < 4; ++i) row[i] = rates[i].pct();
  }
  return out;
}

// Replication dataset --------------------------------------------------------

inline constexpr int kPaperReplications = 20;

struct PaperCell {
  std::string_view model_id;
  std::array<int, 4> wars;  // baseline, multipolar, finite, communication (of 20)
};

// War counts per model and treatment, reconstructed from the published
// aggregates (treatment and model marginals, within-model deltas, the two
// zero-war Sonnet cells).
inline constexpr std::array<PaperCell, 4> kPaperCells{{
    {"gpt-5", {19, 20, 20, 18}},
    {"gemini", {18, 20, 20, 10}},
    {"gpt-5-mini", {15, 19, 20, 6}},
    {"sonnet", {0, 6, 20, 0}},
}};

// Per-treatment war timing and attacker counts. Counts per period bucket and
// per attacker count follow the published totals; the exact periods of the
// delayed multipolar and finite-horizon wars are chosen within their buckets.
struct PaperWarProfile {
  std::vector<std::pair<int, int>> war_periods;  // (period, wars)
  std::vector<std::pair<int, int>> attackers;    // (attackers, wars)
};

inline std::array<PaperWarProfile, 4> paper_war_profiles() {
  return {{
      {{{1, 51}, {2, 1}}, {{1, 25}, {2, 27}}},
      {{{1, 59}, {3, 1}, {4, 1}, {5, 2}, {10, 2}}, {{1, 14}, {2, 18}, {3, 33}}},
      {{{1, 60}, {2, 1}, {7, 6}, {8, 6}, {9, 6}, {10, 1}}, {{1, 28}, {2, 52}}},
      {{{1, 33}, {2, 1}}, {{1, 27}, {2, 7}}},
  }};
}

inline std::vector<int> expand_counts(const std::vector<std::pair<int, int>>& counts) {
  std::vector<int> out;
  for (const auto& [value, n] : counts) out.insert(out.end(), static_cast<std::size_t>(n), value);
  return out;
}

// 320 coded games: 4 models x 4 treatments x 20 replications.
inline std::vector<OutcomeRecord> paper_replication_dataset() {
  const auto profiles = paper_war_profiles();
  std::vector<OutcomeRecord> rows;
  rows.reserve(320);
  for (Treatment t : kAllTreatments) {
    const auto ti = index_of(t);
    const auto periods = expand_counts(profiles[ti].war_periods);
    const auto attackers = expand_counts(profiles[ti].attackers);
    std::size_t war_index = 0;
    const int n_agents = t == Treatment::Multipolar ? 3 : 2;
    for (const auto& cell : kPaperCells) {
      for (int rep = 1; rep <= kPaperReplications; ++rep) {
        OutcomeRecord o;
        o.model_id = std::string(cell.model_id);
        o.treatment = t;
        char key[96];
        std::snprintf(key, sizeof key, "%s__%s__r%03d", o.model_id.c_str(),
                      std::string(slug(t)).c_str(), rep);
        o.run_key = key;
        o.war_started = rep <= cell.wars[ti];
        if (o.war_started) {
          o.war_period = periods.at(war_index);
          o.peaceful_periods_before_war = *o.war_period - 1;
          o.n_attackers = attackers.at(war_index);
          ++war_index;
        }
        o.attack_structure = structure_for(o.n_attackers);
        o.terminal_profile = terminal_profile(n_agents, o.n_attackers);
        rows.push_back(std::move(o));
      }
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const OutcomeRecord& a, const OutcomeRecord& b) { return a.run_key < b.run_key; });
  return rows;
}

// Shares reported for the private-reasoning and public-message taxonomies.
// The underlying texts are not available, so these are constants, not results.
struct ReportedShare {
  std::string_view group;     // treatment (reasoning) or model (messages)
  std::string_view category;
  double pct;
};

inline constexpr std::array<ReportedShare, 9> kReportedReasoningShares{{
    {"BASELINE", "UNKNOWN_HORIZON_COOPERATION", 50.8},
    {"BASELINE", "PRECAUTIONARY_PREEMPTIVE", 27.9},
    {"BASELINE", "BACKWARD_INDUCTION", 1.2},
    {"BASELINE", "TRUST_SIGNALING", 5.1},
    {"MULTIPOLAR", "PRECAUTIONARY_PREEMPTIVE", 34.4},
    {"MULTIPOLAR", "UNKNOWN_HORIZON_COOPERATION", 41.1},
    {"MULTIPOLAR", "BACKWARD_INDUCTION", 1.8},
    {"FINITE_PERIODS", "BACKWARD_INDUCTION", 27.3},
    {"COMMUNICATION", "TRUST_SIGNALING", 14.0},
}};

inline constexpr std::array<ReportedShare, 9> kReportedMessageShares{{
    {"gpt-5", "PROCEDURAL_RULE", 29.2},
    {"gpt-5", "OPEN_DOMINANCE", 48.6},
    {"gpt-5-mini", "RECIPROCAL_PLEDGE", 10.8},
    {"sonnet", "RELATIONAL_TRUST", 37.0},
    {"sonnet", "COLLECTIVE_PAYOFF", 16.5},
    {"sonnet", "OPEN_DOMINANCE", 0.2},
    {"gemini", "COLLECTIVE_PAYOFF", 35.9},
    {"gemini", "RELATIONAL_TRUST", 25.5},
    {"gemini", "OPEN_DOMINANCE", 9.1},
}};

// Category shares --------------------------------------------------------------

// Percentage of entries per category within each group; every group sums to 100.
template <typename Row, typename GroupFn, std::size_t N, typename Category>
std::map<std::string, std::array<double, N>> category_shares(
    const std::vector<Row>& rows, GroupFn group_of, const std::array<Category, N>& categories) {
  std::map<std::string, std::array<int, N>> counts;
  for (const auto& r : rows) {
    auto& c = counts[group_of(r)];
    for (std::size_t i = 0; i < N; ++i) {
      if (categories[i] == r.label.category) ++c[i];
    }
  }
  std::map<std::string, std::array<double, N>> out;
  for (const auto& [g, c] : counts) {
    int total = 0;
    for (int v : c) total += v;
    auto& shares = out[g];
    for (std::size_t i = 0; i < N; ++i) shares[i] = total ? 100.0 * c[i] / total : 0.0;
  }
  return out;
}

} // namespace dilemma
