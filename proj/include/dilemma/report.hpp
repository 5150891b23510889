#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dilemma/coding.hpp"
#include "dilemma/csv.hpp"
#include "dilemma/stats.hpp"

namespace dilemma {

struct EmptyReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bar {
  std::string group;
  std::string label;
  double value = 0;
  std::string display;
};

struct Exhibit {
  std::string name;   // file stem, e.g. "exhibit1_incidence"
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;
  std::vector<Bar> bars;
  std::string value_axis;

  // Cell by first-column key and column name; nullopt when absent.
  std::optional<std::string> cell(const std::string& row_key, const std::string& column) const {
    auto c = std::find(columns.begin(), columns.end(), column);
    if (c == columns.end()) return std::nullopt;
    const auto ci = static_cast<std::size_t>(c - columns.begin());
    for (const auto& r : rows) {
      if (!r.empty() && r[0] == row_key) return r.at(ci);
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string pct1(const std::optional<double>& v) { return v ? format_fixed(*v, 1) : ""; }

inline std::string signed1(double v) {
  auto s = format_fixed(v, 1);
  return (v > 0 && s != "0.0") ? "+" + s : s;
}

inline std::vector<std::string> treatment_columns(std::string first) {
  std::vector<std::string> cols{std::move(first)};
  for (Treatment t : kAllTreatments) cols.emplace_back(to_string(t));
  return cols;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out.empty() ? " " : out;
}

} // namespace detail

// Exhibit builders -----------------------------------------------------------

inline Exhibit incidence_exhibit(std::span<const OutcomeRecord> outcomes) {
  const auto t = incidence_table(outcomes);
  Exhibit e{"exhibit1_incidence", "War incidence by game type (% of games ending in war)",
            detail::treatment_columns("model"), {}, {}, {}, "% of games"};
  e.columns.push_back("ALL");
  for (const auto& m : t.models) {
    std::vector<std::string> row{m};
    for (Treatment tr : kAllTreatments) row.push_back(detail::pct1(t.cell_pct(m, tr)));
    row.push_back(detail::pct1(t.model_pct(m)));
    e.rows.push_back(std::move(row));
  }
  std::vector<std::string> pooled{"pooled"};
  for (Treatment tr : kAllTreatments) {
    const auto v = t.treatment_pct(tr);
    pooled.push_back(detail::pct1(v));
    if (v) e.bars.push_back({"pooled", std::string(to_string(tr)), *v, format_fixed(*v, 1)});
  }
  pooled.push_back(detail::pct1(t.overall.pct()));
  e.rows.push_back(std::move(pooled));
  for (const auto& m : t.models) {
    if (auto v = t.model_pct(m)) e.bars.push_back({"by model", m, *v, format_fixed(*v, 1)});
  }
  e.notes.push_back("Games: " + std::to_string(t.overall.games) + "; wars: " +
                    std::to_string(t.overall.wars) + ". Empty cells have no games.");
  return e;
}

inline Exhibit timing_exhibit(std::span<const OutcomeRecord> outcomes) {
  const auto ts = timing_stats(outcomes);
  std::size_t periods = kPaperMaxPeriods;
  for (const auto& s : ts) periods = std::max(periods, s.war_period_histogram.size());
  Exhibit e{"exhibit2_timing", "Peaceful periods before war (war games only)",
            {"treatment", "war_games", "mean_peaceful_periods"}, {}, {}, {}, "periods"};
  for (std::size_t p = 1; p <= periods; ++p) e.columns.push_back("war_in_period_" + std::to_string(p));
  int total = 0;
  for (Treatment t : kAllTreatments) {
    const auto& s = ts[index_of(t)];
    total += s.war_games;
    std::vector<std::string> row{std::string(to_string(t)), std::to_string(s.war_games),
                                 s.mean_peaceful_periods ? format_fixed(*s.mean_peaceful_periods, 2)
                                                         : "no wars"};
    for (std::size_t p = 0; p < periods; ++p) {
      row.push_back(std::to_string(p < s.war_period_histogram.size() ? s.war_period_histogram[p] : 0));
    }
    e.rows.push_back(std::move(row));
    if (s.mean_peaceful_periods) {
      e.bars.push_back({"mean", std::string(to_string(t)), *s.mean_peaceful_periods,
                        format_fixed(*s.mean_peaceful_periods, 2)});
    }
  }
  if (total == 0) e.notes.push_back("no wars");
  return e;
}

inline Exhibit structure_exhibit(std::span<const OutcomeRecord> outcomes) {
  const auto st = attack_structure_table(outcomes);
  Exhibit e{"exhibit3_attack_structure", "Unilateral versus simultaneous attacks",
            {"treatment", "UNILATERAL", "SIMULTANEOUS_2", "SIMULTANEOUS_3", "SIMULTANEOUS", "wars"},
            {}, {}, {}, "wars"};
  int total = 0;
  for (Treatment t : kAllTreatments) {
    const auto& s = st[index_of(t)];
    total += s.wars();
    e.rows.push_back({std::string(to_string(t)), std::to_string(s.unilateral),
                      std::to_string(s.simultaneous_2), std::to_string(s.simultaneous_3),
                      std::to_string(s.simultaneous()), std::to_string(s.wars())});
    const std::string g(to_string(t));
    e.bars.push_back({g, "unilateral", double(s.unilateral), std::to_string(s.unilateral)});
    e.bars.push_back({g, "simultaneous", double(s.simultaneous()), std::to_string(s.simultaneous())});
  }
  if (total == 0) e.notes.push_back("no wars");
  return e;
}

template <typename Row, std::size_t N, typename Category, typename GroupFn>
Exhibit share_exhibit(std::string name, std::string title, std::string group_col,
                      const std::vector<Row>& rows, const std::array<Category, N>& cats,
                      GroupFn group_of) {
  Exhibit e{std::move(name), std::move(title), {std::move(group_col)}, {}, {}, {}, "% of entries"};
  for (auto c : cats) e.columns.emplace_back(to_string(c));
  e.columns.push_back("entries");
  std::map<std::string, int> counts;
  for (const auto& r : rows) ++counts[group_of(r)];
  for (const auto& [g, shares] : category_shares(rows, group_of, cats)) {
    std::vector<std::string> row{g};
    for (std::size_t i = 0; i < N; ++i) {
      row.push_back(format_fixed(shares[i], 1));
      e.bars.push_back({g, std::string(to_string(cats[i])), shares[i], format_fixed(shares[i], 1)});
    }
    row.push_back(std::to_string(counts[g]));
    e.rows.push_back(std::move(row));
  }
  e.notes.push_back("One label per entry by dictionary precedence; rows sum to 100.");
  if (rows.empty()) e.notes.push_back("no entries");
  return e;
}

inline Exhibit reasoning_exhibit(const std::vector<ReasoningRow>& rows) {
  return share_exhibit("exhibit4_reasoning", "Private reasoning by strategic logic", "treatment",
                       rows, kReasoningCategories,
                       [](const ReasoningRow& r) { return std::string(to_string(r.treatment)); });
}

inline Exhibit message_exhibit(const std::vector<MessageRow>& rows) {
  return share_exhibit("exhibit5_messages", "Public messages by type", "model", rows,
                       kMessageCategories, [](const MessageRow& r) { return r.model_id; });
}

template <std::size_t N, std::size_t K, typename Category>
Exhibit reported_share_exhibit(std::string name, std::string title, std::string group_col,
                               const std::array<ReportedShare, N>& shares,
                               const std::array<Category, K>& cats,
                               const std::vector<std::string>& group_order) {
  Exhibit e{std::move(name), std::move(title), {std::move(group_col)}, {}, {}, {}, "% of entries"};
  for (auto c : cats) e.columns.emplace_back(to_string(c));
  for (const auto& g : group_order) {
    std::vector<std::string> row{g};
    for (auto c : cats) {
      std::string cell;
      for (const auto& s : shares) {
        if (s.group == g && s.category == to_string(c)) {
          cell = format_fixed(s.pct, 1);
          e.bars.push_back({g, std::string(to_string(c)), s.pct, cell});
        }
      }
      row.push_back(cell);
    }
    e.rows.push_back(std::move(row));
  }
  e.notes.push_back("Published shares shown as labeled constants; not recomputed. "
                    "Blank cells were not reported.");
  return e;
}

inline Exhibit lpm_exhibit(std::span<const OutcomeRecord> outcomes, const RegressionSpec& spec) {
  Exhibit e{"exhibit6_lpm", "Linear probability model of war onset with model fixed effects",
            {"term", "coefficient_pp", "robust_se_pp", "ci95_low_pp", "ci95_high_pp", "se_hc0_pp",
             "se_hc1_pp", "se_hc2_pp", "se_hc3_pp", "coefficient_pp_exact"},
            {}, {}, {}, "percentage points"};
  RegressionResult r;
  try {
    r = fit_lpm(outcomes, spec);
  } catch (const SingularDesignError& err) {
    e.notes.push_back(std::string("not estimable: ") + err.what());
    return e;
  }
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double b = 100.0 * r.coefficients[ii];
    const double se = 100.0 * r.se()[ii];
    std::vector<std::string> row{r.names[i], format_fixed(b, 1), format_fixed(se, 1),
                                 format_fixed(b - 1.96 * se, 1), format_fixed(b + 1.96 * se, 1)};
    for (auto c : kAllCovariances) {
      row.push_back(format_fixed(100.0 * r.robust_se[static_cast<std::size_t>(c)][ii], 2));
    }
    char exact[40];
    std::snprintf(exact, sizeof exact, "%.6f", b);
    row.emplace_back(exact);
    e.rows.push_back(std::move(row));
    if (i > 0 && r.names[i].rfind("model:", 0) != 0) {
      e.bars.push_back({"treatment", r.names[i], b, format_fixed(b, 1)});
    }
  }
  e.notes.push_back("Outcome: war started (0/1). Reference treatment: " +
                    std::string(to_string(r.reference_treatment)) +
                    "; reference model: " + r.reference_model + ".");
  e.notes.push_back("N=" + std::to_string(r.n) + "; models=" + std::to_string(r.models) +
                    "; R-squared=" + format_fixed(r.r_squared, 3) + "; robust SE: " +
                    std::string(to_string(r.covariance)) + ".");
  if (r.warning) e.notes.push_back("warning: " + *r.warning);
  return e;
}

inline Exhibit deltas_exhibit(std::span<const OutcomeRecord> outcomes) {
  Exhibit e{"robustness_within_model_deltas",
            "Within-model treatment effects (pp difference from own baseline)",
            {"model", "BASELINE_rate", "MULTIPOLAR", "FINITE_PERIODS", "COMMUNICATION",
             "FINITE_PERIODS_rate"},
            {}, {}, {}, "percentage points"};
  const auto table = incidence_table(outcomes);
  for (const auto& [m, d] : within_model_deltas(outcomes)) {
    std::vector<std::string> row{m, detail::pct1(table.cell_pct(m, Treatment::Baseline))};
    for (Treatment t : {Treatment::Multipolar, Treatment::FinitePeriods, Treatment::Communication}) {
      const auto& v = d[index_of(t)];
      row.push_back(v ? detail::signed1(*v) : "");
      if (v) e.bars.push_back({m, std::string(to_string(t)), *v, detail::signed1(*v)});
    }
    row.push_back(detail::pct1(table.cell_pct(m, Treatment::FinitePeriods)));
    e.rows.push_back(std::move(row));
  }
  if (e.rows.empty()) e.notes.push_back("no model has a baseline cell");
  return e;
}

inline Exhibit leave_one_out_exhibit(std::span<const OutcomeRecord> outcomes) {
  Exhibit e{"robustness_leave_one_out", "Pooled war rates omitting one model",
            detail::treatment_columns("omitted_model"), {}, {}, {}, "% of games"};
  if (model_ids(outcomes).size() < 2) {
    e.notes.push_back("requires at least two models");
    return e;
  }
  for (const auto& [m, rates] : leave_one_model_out(outcomes)) {
    std::vector<std::string> row{m};
    for (Treatment t : kAllTreatments) {
      const auto& v = rates[index_of(t)];
      row.push_back(detail::pct1(v));
      if (v) e.bars.push_back({"omit " + m, std::string(to_string(t)), *v, format_fixed(*v, 1)});
    }
    e.rows.push_back(std::move(row));
  }
  return e;
}

// Writers --------------------------------------------------------------------

inline std::string to_csv(const Exhibit& e) {
  std::ostringstream out;
  csv::write_row(out, e.columns);
  for (const auto& r : e.rows) csv::write_row(out, r);
  return out.str();
}

inline std::string to_markdown(const Exhibit& e) {
  std::ostringstream out;
  out << "## " << e.title << "\n\n";
  if (!e.columns.empty()) {
    out << '|';
    for (const auto& c : e.columns) out << ' ' << detail::md_cell(c) << " |";
    out << "\n|";
    for (std::size_t i = 0; i < e.columns.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
    out << '\n';
    for (const auto& r : e.rows) {
      out << '|';
      for (const auto& c : r) out << ' ' << detail::md_cell(c) << " |";
      out << '\n';
    }
  }
  if (!e.notes.empty()) {
    out << '\n';
    for (const auto& n : e.notes) out << "- " << n << '\n';
  }
  return out.str();
}

// Horizontal bar chart; each bar carries its value as a text label.
inline std::string to_svg(const Exhibit& e) {
  constexpr int label_w = 260, plot_w = 420, bar_h = 18, gap = 6, group_gap = 14, top = 40;
  double lo = 0, hi = 0;
  for (const auto& b : e.bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  if (hi - lo <= 0) hi = 1;
  const auto x_of = [&](double v) { return label_w + plot_w * (v - lo) / (hi - lo); };

  std::ostringstream body;
  int y = top;
  std::string group;
  for (std::size_t i = 0; i < e.bars.size(); ++i) {
    const auto& b = e.bars[i];
    if (i == 0 || b.group != group) {
      if (i != 0) y += group_gap;
      group = b.group;
      body << "  <text class=\"group\" x=\"8\" y=\"" << y + 12 << "\">"
           << detail::xml_escape(group) << "</text>\n";
      y += bar_h + gap;
    }
    const double x0 = x_of(0), x1 = x_of(b.value);
    char rect[160];
    std::snprintf(rect, sizeof rect, "<rect x=\"%.1f\" y=\"%d\" width=\"%.1f\" height=\"%d\"/>",
                  std::min(x0, x1), y, std::abs(x1 - x0), bar_h);
    char val[64];
    std::snprintf(val, sizeof val, "x=\"%.1f\" y=\"%d\"", std::max(x0, x1) + 4, y + 13);
    body << "  <g><title>" << detail::xml_escape(b.group + " / " + b.label + ": " + b.display)
         << "</title>\n"
         << "    <text class=\"label\" x=\"" << label_w - 6 << "\" y=\"" << y + 13 << "\">"
         << detail::xml_escape(b.label) << "</text>\n"
         << "    " << rect << "\n"
         << "    <text class=\"value\" " << val << ">" << detail::xml_escape(b.display)
         << "</text></g>\n";
    y += bar_h + gap;
  }
  if (e.bars.empty()) {
    body << "  <text x=\"8\" y=\"" << y + 12 << "\">no data</text>\n";
    y += bar_h + gap;
  }
  const int height = y + 30;
  const int width = label_w + plot_w + 80;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" role=\"img\" aria-label=\"" << detail::xml_escape(e.title) << "\">\n"
      << "  <style>text{font:12px sans-serif}.label{text-anchor:end}.group{font-weight:bold}"
         "rect{fill:#4a6fa5}</style>\n"
      << "  <text x=\"8\" y=\"20\" font-weight=\"bold\">" << detail::xml_escape(e.title)
      << "</text>\n"
      << body.str();
  char axis[200];
  std::snprintf(axis, sizeof axis,
                "  <line x1=\"%.1f\" y1=\"%d\" x2=\"%.1f\" y2=\"%d\" stroke=\"#333\"/>\n",
                x_of(0), top, x_of(0), y);
  out << axis << "  <text x=\"" << label_w << "\" y=\"" << y + 20 << "\">"
      << detail::xml_escape(e.value_axis) << "</text>\n</svg>\n";
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("short write to " + path.string());
}

// Writes <name>.csv/.md/.svg per exhibit and a combined report.md.
inline void write_exhibits(const std::filesystem::path& dir, const std::vector<Exhibit>& exhibits,
                           const std::string& heading) {
  std::filesystem::create_directories(dir);
  std::string combined = "# " + heading + "\n\n";
  for (const auto& e : exhibits) {
    write_text_file(dir / (e.name + ".csv"), to_csv(e));
    write_text_file(dir / (e.name + ".md"), to_markdown(e));
    write_text_file(dir / (e.name + ".svg"), to_svg(e));
    combined += to_markdown(e) + "\n";
  }
  write_text_file(dir / "report.md", combined);
}

// Assemblies -----------------------------------------------------------------

inline std::vector<Exhibit> outcome_exhibits(std::span<const OutcomeRecord> outcomes,
                                             const RegressionSpec& spec) {
  if (outcomes.empty()) throw EmptyReportError("no completed games to report on");
  return {incidence_exhibit(outcomes), timing_exhibit(outcomes), structure_exhibit(outcomes),
          lpm_exhibit(outcomes, spec), deltas_exhibit(outcomes), leave_one_out_exhibit(outcomes)};
}

inline std::vector<Exhibit> corpus_exhibits(const CodedCorpus& coded, const RegressionSpec& spec) {
  auto out = outcome_exhibits(coded.outcomes, spec);
  out.insert(out.begin() + 3, reasoning_exhibit(coded.reasoning));
  out.insert(out.begin() + 4, message_exhibit(coded.messages));
  if (!coded.rejected.empty()) {
    out.front().notes.push_back(std::to_string(coded.rejected.size()) +
                                " game(s) excluded (aborted or refused by the coder).");
  }
  return out;
}

inline std::vector<Exhibit> replication_exhibits(const RegressionSpec& spec) {
  const auto data = paper_replication_dataset();
  auto out = outcome_exhibits(data, spec);
  std::vector<std::string> treatments;
  for (Treatment t : kAllTreatments) treatments.emplace_back(to_string(t));
  std::vector<std::string> models;
  for (const auto& c : kPaperCells) models.emplace_back(c.model_id);
  out.insert(out.begin() + 3,
             reported_share_exhibit("exhibit4_reasoning",
                                    "Private reasoning by strategic logic (reported shares)",
                                    "treatment", kReportedReasoningShares, kReasoningCategories,
                                    treatments));
  out.insert(out.begin() + 4,
             reported_share_exhibit("exhibit5_messages",
                                    "Public messages by type (reported shares)", "model",
                                    kReportedMessageShares, kMessageCategories, models));
  return out;
}

// Replication checks ---------------------------------------------------------

struct CellCheck {
  std::string exhibit;
  std::string row;
  std::string column;
  std::string expected;
  std::optional<std::string> actual;
  double tolerance = 0;  // 0 means exact string match

  bool ok() const {
    if (!actual) return false;
    if (tolerance == 0) return *actual == expected;
    try {
      return std::abs(std::stod(*actual) - std::stod(expected)) <= tolerance + 1e-12;
    } catch (const std::exception&) {
      return false;
    }
  }
  std::string describe() const {
    return exhibit + " [" + row + ", " + column + "]: expected " + expected +
           (tolerance > 0 ? " +/- " + format_fixed(tolerance, 2) : "") + ", got " +
           actual.value_or("(missing)");
  }
};

inline std::vector<CellCheck> replication_checks(const std::vector<Exhibit>& exhibits) {
  auto find = [&](const std::string& name) -> const Exhibit& {
    for (const auto& e : exhibits) {
      if (e.name == name) return e;
    }
    throw std::logic_error("missing exhibit " + name);
  };
  std::vector<CellCheck> checks;
  auto add = [&](const std::string& ex, const std::string& row, const std::string& col,
                 const std::string& expected, double tol = 0) {
    checks.push_back({ex, row, col, expected, find(ex).cell(row, col), tol});
  };
  const std::array<std::string, 4> tn{"BASELINE", "MULTIPOLAR", "FINITE_PERIODS", "COMMUNICATION"};

  const std::array<std::string, 4> pooled{"65.0", "81.3", "100.0", "42.5"};
  for (std::size_t i = 0; i < 4; ++i) add("exhibit1_incidence", "pooled", tn[i], pooled[i]);
  const std::array<std::pair<std::string, std::string>, 4> marg{
      {{"gpt-5", "96.3"}, {"gemini", "85.0"}, {"gpt-5-mini", "75.0"}, {"sonnet", "32.5"}}};
  for (const auto& [m, v] : marg) add("exhibit1_incidence", m, "ALL", v);

  add("exhibit2_timing", "BASELINE", "mean_peaceful_periods", "0.02");
  add("exhibit2_timing", "MULTIPOLAR", "mean_peaceful_periods", "0.48", 0.02);
  add("exhibit2_timing", "FINITE_PERIODS", "mean_peaceful_periods", "1.70", 0.02);
  add("exhibit2_timing", "COMMUNICATION", "mean_peaceful_periods", "0.03");
  add("exhibit2_timing", "MULTIPOLAR", "war_in_period_1", "59");
  add("exhibit2_timing", "FINITE_PERIODS", "war_in_period_1", "60");

  add("exhibit3_attack_structure", "BASELINE", "UNILATERAL", "25");
  add("exhibit3_attack_structure", "BASELINE", "SIMULTANEOUS", "27");
  add("exhibit3_attack_structure", "FINITE_PERIODS", "UNILATERAL", "28");
  add("exhibit3_attack_structure", "FINITE_PERIODS", "SIMULTANEOUS", "52");
  add("exhibit3_attack_structure", "MULTIPOLAR", "UNILATERAL", "14");
  add("exhibit3_attack_structure", "MULTIPOLAR", "SIMULTANEOUS_2", "18");
  add("exhibit3_attack_structure", "MULTIPOLAR", "SIMULTANEOUS_3", "33");
  add("exhibit3_attack_structure", "COMMUNICATION", "UNILATERAL", "27");
  add("exhibit3_attack_structure", "COMMUNICATION", "SIMULTANEOUS", "7");

  add("exhibit6_lpm", "MULTIPOLAR", "coefficient_pp", "16.3");
  add("exhibit6_lpm", "FINITE_PERIODS", "coefficient_pp", "35.0");
  add("exhibit6_lpm", "COMMUNICATION", "coefficient_pp", "-22.5");
  add("exhibit6_lpm", "MULTIPOLAR", "robust_se_pp", "4.7", 0.5);
  add("exhibit6_lpm", "FINITE_PERIODS", "robust_se_pp", "4.5", 0.5);
  add("exhibit6_lpm", "COMMUNICATION", "robust_se_pp", "5.8", 0.5);
  {
    const auto& lpm = find("exhibit6_lpm");
    std::optional<std::string> r2;
    for (const auto& n : lpm.notes) {
      const auto at = n.find("R-squared=");
      if (at != std::string::npos) r2 = n.substr(at + 10, 5);
    }
    checks.push_back({"exhibit6_lpm", "notes", "R-squared", "0.512", r2, 0.001});
  }

  const std::array<std::pair<std::string, std::array<std::string, 4>>, 4> loo{{
      {"gemini", {"56.7", "75.0", "100.0", "40.0"}},
      {"gpt-5", {"55.0", "75.0", "100.0", "26.7"}},
      {"gpt-5-mini", {"61.7", "76.7", "100.0", "46.7"}},
      {"sonnet", {"86.7", "98.3", "100.0", "56.7"}},
  }};
  for (const auto& [m, vals] : loo) {
    for (std::size_t i = 0; i < 4; ++i) add("robustness_leave_one_out", m, tn[i], vals[i]);
  }

  const std::array<std::tuple<std::string, std::string, std::string>, 4> deltas{{
      {"gpt-5", "+5.0", "-5.0"},
      {"gemini", "+10.0", "-40.0"},
      {"gpt-5-mini", "+20.0", "-45.0"},
      {"sonnet", "+30.0", "0.0"},
  }};
  for (const auto& [m, mp, comm] : deltas) {
    add("robustness_within_model_deltas", m, "MULTIPOLAR", mp);
    add("robustness_within_model_deltas", m, "COMMUNICATION", comm);
    add("robustness_within_model_deltas", m, "FINITE_PERIODS_rate", "100.0");
  }
  return checks;
}

} // namespace dilemma
