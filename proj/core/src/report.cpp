#include <algorithm>
#include <functional>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topictrend/pipeline.hpp"
#include "topictrend/table.hpp"

namespace topictrend::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kTableDigits = 6;

std::string cell(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return format_number(v.get<double>(), kTableDigits);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ", ") + cell(e);
    return out;
  }
  return v.dump();
}

std::string exact(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  return format_number(v.get<double>());
}

// Long-form plot rows: series, x, y, band_low, band_high.
struct PlotData {
  Table table{{"series", "x", "y", "band_low", "band_high"}, {}};
  void add(const std::string& series, const json& x, const json& y, const json& lo = nullptr,
           const json& hi = nullptr) {
    table.add_row({series, exact(x), exact(y), lo.is_null() ? "" : exact(lo), hi.is_null() ? "" : exact(hi)});
  }
};

class Writer {
 public:
  Writer(fs::path dir, ReportFormat format) : dir_(std::move(dir)), format_(format) {}

  void table(const std::string& name, const Table& t) {
    if (format_ != ReportFormat::Tables) return;
    emit("report/tables/" + name + ".tsv", t);
  }
  void plot(const std::string& name, const PlotData& p) {
    if (format_ != ReportFormat::PlotData || p.table.rows.empty()) return;
    emit("report/plotdata/" + name + ".tsv", p.table);
  }
  const std::vector<std::string>& written() const { return written_; }

 private:
  void emit(const std::string& rel, const Table& t) {
    t.write(dir_ / rel);
    written_.push_back(rel);
  }
  fs::path dir_;
  ReportFormat format_;
  std::vector<std::string> written_;
};

json load(const fs::path& p) { return json::parse(read_text_file(p)); }

const json& at(const json& m, std::size_t h, std::size_t i, std::size_t j) { return m[h][i][j]; }

void render_ingest(const json& j, Writer& w) {
  Table t{{"quantity", "value"}, {}};
  for (const char* k : {"rows_read", "dropped_empty_abstract", "dropped_out_of_range_year", "loaded", "selected",
                        "documents", "terms", "tokens"})
    t.add_row({k, cell(j.at(k))});
  t.add_row({"dropped_empty_documents", std::to_string(j.at("dropped_empty_documents").size())});
  w.table("ingest", t);
}

void render_select_k(const json& j, Writer& w) {
  Table t{{"K", "SC", "EX", "SER", "dSER", "wSER", "improvement", "highlight"}, {}};
  PlotData p;
  for (const auto& r : j.at("rows")) {
    t.add_row({cell(r["K"]), cell(r["coherence"]), cell(r["exclusivity"]), cell(r["ser"]), cell(r["delta_ser"]),
               cell(r["weighted_delta_ser"]), cell(r["improvement"]), cell(r["highlight"])});
    p.add("SC", r["K"], r["coherence"]);
    p.add("EX", r["K"], r["exclusivity"]);
    p.add("SER", r["K"], r["ser"]);
    if (!r["weighted_delta_ser"].is_null()) p.add("wSER", r["K"], r["weighted_delta_ser"]);
  }
  w.table("select_k", t);
  w.plot("select_k", p);
}

void render_topics(const json& j, Writer& w) {
  Table t{{"topic", "prevalence", "SC", "EX", "highest_prob", "frex"}, {}};
  for (const auto& r : j.at("topics"))
    t.add_row({cell(r["topic"]), cell(r["prevalence"]), cell(r["coherence"]), cell(r["exclusivity"]),
               cell(r["highest_prob"]), cell(r["frex"])});
  w.table("topics", t);
  Table e{{"topic", "covariate", "estimate", "std_error", "ci_low", "ci_high", "method"}, {}};
  for (const auto& r : j.at("effects"))
    e.add_row({cell(r["topic"]), cell(r["covariate"]), cell(r["estimate"]), cell(r["std_error"]), cell(r["ci_low"]),
               cell(r["ci_high"]), cell(r["method"])});
  w.table("topic_effects", e);
  PlotData p;
  const auto& trace = j.at("bound_trace");
  for (std::size_t i = 0; i < trace.size(); ++i) p.add("bound", i + 1, trace[i]);
  w.plot("topics", p);
}

void series_out(const json& s, const std::string& name, Writer& w, PlotData& p) {
  Table t;
  t.header = {"year"};
  for (const auto& l : s.at("labels")) t.header.push_back(l.get<std::string>());
  t.header.push_back("docs");
  const auto& years = s.at("years");
  for (std::size_t y = 0; y < years.size(); ++y) {
    std::vector<std::string> row{cell(years[y])};
    for (std::size_t c = 0; c < s["labels"].size(); ++c) {
      row.push_back(cell(s["values"][y][c]));
      p.add(s["labels"][c].get<std::string>(), years[y], s["values"][y][c]);
    }
    row.push_back(cell(s["doc_counts"][y]));
    t.add_row(std::move(row));
  }
  w.table(name, t);
}

void render_trends(const json& j, Writer& w) {
  PlotData p;
  series_out(j.at("topic_series"), "topic_series", w, p);
  if (!j.at("category_series").is_null()) series_out(j["category_series"], "category_series", w, p);

  const auto& ks = j.at("ks");
  Table k{{"series", "split_year", "direction", "D+", "p", "p_floored", "early_n", "late_n"}, {}};
  k.add_row({cell(ks["series"]), cell(ks["split_year"]), "early - late", cell(ks["d_plus_early_minus_late"]),
             cell(ks["p_early_minus_late"]), cell(ks["p_early_minus_late_floored"]), cell(ks["early_n"]),
             cell(ks["late_n"])});
  k.add_row({cell(ks["series"]), cell(ks["split_year"]), "late - early", cell(ks["d_plus_late_minus_early"]),
             cell(ks["p_late_minus_early"]), cell(ks["p_late_minus_early_floored"]), cell(ks["early_n"]),
             cell(ks["late_n"])});
  w.table("ks", k);

  for (const char* part : {"early", "late"}) {
    const auto& d = j.at("density")[part];
    if (d.is_null()) continue;
    for (std::size_t i = 0; i < d["x"].size(); ++i) p.add(std::string("pdf:") + part, d["x"][i], d["pdf"][i]);
    for (std::size_t i = 0; i < d["cdf_x"].size(); ++i) p.add(std::string("cdf:") + part, d["cdf_x"][i], d["cdf"][i]);
  }

  const auto& tq = j.at("top_quantile");
  Table q{{"year", "mean_top_share", "trend", "docs"}, {}};
  for (std::size_t i = 0; i < tq["years"].size(); ++i) {
    q.add_row({cell(tq["years"][i]), cell(tq["values"][i]), cell(tq["fitted"][i]), cell(tq["doc_counts"][i])});
    p.add("top_share", tq["years"][i], tq["values"][i]);
    p.add("top_share_trend", tq["years"][i], tq["fitted"][i]);
  }
  w.table("top_share", q);
  w.plot("trends", p);
}

void render_unitroot(const json& j, Writer& w) {
  Table t{{"series", "test", "type", "lag", "statistic", "p"}, {}};
  for (const auto& s : j.at("series"))
    for (const auto& r : s.at("reports"))
      t.add_row({cell(s["label"]), cell(r["test"]), r["model_type"].is_null() ? "" : cell(r["model_type"]),
                 cell(r["lag"]), cell(r["statistic"]), cell(r["p_text"])});
  w.table("unitroot", t);
}

void render_regress(const json& j, Writer& w) {
  Table t{{"topic", "transform", "log_topic", "log_topic_se", "open_access", "open_access_se", "N", "clusters",
           "parameters", "R2", "within_R2", "omitted"},
          {}};
  for (const auto& f : j.at("fits")) {
    json topic = nullptr, topic_se = nullptr, oa = nullptr, oa_se = nullptr;
    for (const auto& c : f["coefficients"]) {
      if (c["name"] == "log_topic") topic = c["estimate"], topic_se = c["std_error"];
      if (c["name"] == "open_access") oa = c["estimate"], oa_se = c["std_error"];
    }
    t.add_row({cell(f["topic"]), cell(f["label"]), cell(topic), cell(topic_se), cell(oa), cell(oa_se), cell(f["n"]),
               cell(f["clusters"]), cell(f["parameters"]), cell(f["r2"]), cell(f["within_r2"]),
               std::to_string(f["omitted"].size())});
  }
  w.table("regress", t);
}

void render_cointegration(const json& j, Writer& w) {
  Table t{{"rank", "parameters", "LL", "eigenvalue", "trace", "crit_5", "crit_1", "selected"}, {}};
  const auto& jo = j.at("johansen");
  for (const auto& r : jo.at("rows"))
    t.add_row({cell(r["rank"]), cell(r["parameters"]), cell(r["log_likelihood"]), cell(r["eigenvalue"]),
               cell(r["trace"]), cell(r["crit_5"]), cell(r["crit_1"]),
               jo["selected_rank"] == r["rank"] ? "*" : ""});
  w.table("johansen", t);
  const auto& eg = j.at("engle_granger");
  if (!eg.is_null()) {
    Table e{{"dependent", "lag", "statistic", "crit_1", "crit_5", "crit_10", "first_stage_r2"}, {}};
    e.add_row({cell(eg["dependent"]), cell(eg["lag"]), cell(eg["statistic"]), cell(eg["crit_1"]), cell(eg["crit_5"]),
               cell(eg["crit_10"]), cell(eg["r2"])});
    w.table("engle_granger", e);
  }
}

void render_diagnostics(const json& d, const std::string& prefix, Writer& w) {
  Table s{{"real", "imag", "modulus"}, {}};
  for (const auto& e : d.at("stability")) s.add_row({cell(e["real"]), cell(e["imag"]), cell(e["modulus"])});
  w.table(prefix + "_stability", s);
  Table n{{"equation", "skewness_chi2", "skewness_p", "kurtosis_chi2", "kurtosis_p", "jb", "jb_p"}, {}};
  for (const auto& r : d.at("normality").at("equations"))
    n.add_row({cell(r["equation"]), cell(r["skewness_chi2"]), cell(r["skewness_p"]), cell(r["kurtosis_chi2"]),
               cell(r["kurtosis_p"]), cell(r["jb"]), cell(r["jb_p"])});
  const auto& jt = d["normality"]["joint"];
  n.add_row({"ALL", cell(jt["skewness_chi2"]), cell(jt["skewness_p"]), cell(jt["kurtosis_chi2"]),
             cell(jt["kurtosis_p"]), cell(jt["jb"]), cell(jt["jb_p"])});
  w.table(prefix + "_normality", n);
  Table l{{"lag", "chi2", "df", "p"}, {}};
  for (const auto& r : d.at("lm")) l.add_row({cell(r["lag"]), cell(r["chi2"]), cell(r["df"]), cell(r["p"])});
  w.table(prefix + "_lm", l);
}

void render_var(const json& j, Writer& w) {
  const auto& sel = j.at("lag_selection");
  Table t{{"lag", "LL", "LR", "df", "p", "FPE", "AIC", "HQIC", "SBIC"}, {}};
  for (const auto& r : sel.at("rows"))
    t.add_row({cell(r["lag"]), cell(r["log_likelihood"]), cell(r["lr"]), cell(r["df"]), cell(r["p"]), cell(r["fpe"]),
               cell(r["aic"]), cell(r["hqic"]), cell(r["sbic"])});
  w.table("var_lag_selection", t);

  const auto& m = j.at("model");
  const auto& names = j.at("variables");
  Table c{{"equation", "regressor", "estimate", "std_error"}, {}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    c.add_row({cell(names[i]), "const", cell(m["intercept"][i]), cell(m["std_errors"][i][0])});
    for (std::size_t l = 0; l < m["coefs"].size(); ++l)
      for (std::size_t k = 0; k < names.size(); ++k)
        c.add_row({cell(names[i]), fmt::format("L{}.{}", l + 1, names[k].get<std::string>()),
                   cell(m["coefs"][l][i][k]), cell(m["std_errors"][i][1 + l * names.size() + k])});
  }
  w.table("var_coefficients", c);
  render_diagnostics(j.at("diagnostics"), "var", w);
}

void render_vecm(const json& j, Writer& w) {
  const auto& names = j.at("variables");
  Table t{{"variable"}, {}};
  const auto r = j.at("rank").get<std::size_t>();
  for (std::size_t c = 0; c < r; ++c) {
    t.header.push_back(fmt::format("alpha{}", c + 1));
    t.header.push_back(fmt::format("beta{}", c + 1));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<std::string> row{cell(names[i])};
    for (std::size_t c = 0; c < r; ++c) {
      row.push_back(cell(j["alpha"][i][c]));
      row.push_back(cell(j["beta"][i][c]));
    }
    t.add_row(std::move(row));
  }
  w.table("vecm_loadings", t);
  render_diagnostics(j.at("diagnostics"), "vecm", w);
}

void render_granger(const json& j, Writer& w) {
  Table t{{"equation", "excluded", "chi2", "df", "p"}, {}};
  for (const auto& r : j.at("rows"))
    t.add_row({cell(r["equation"]), cell(r["excluded"]), cell(r["chi2"]), cell(r["df"]), cell(r["p"])});
  w.table("granger", t);
}

// paths[h][i][j]: response of i to shock j.
void paths_out(const json& paths, const json& lower, const json& upper, const json& names, const std::string& prefix,
               const std::string& sep, PlotData& p, Table* t) {
  const auto K = names.size();
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t s = 0; s < K; ++s) {
      const auto label =
          fmt::format("{}{}{}{}", prefix, names[s].get<std::string>(), sep, names[i].get<std::string>());
      for (std::size_t h = 0; h < paths.size(); ++h) {
        const json lo = lower.is_null() ? json(nullptr) : at(lower, h, i, s);
        const json hi = upper.is_null() ? json(nullptr) : at(upper, h, i, s);
        p.add(label, h, at(paths, h, i, s), lo, hi);
        if (t) t->add_row({label, std::to_string(h), cell(at(paths, h, i, s)), cell(lo), cell(hi)});
      }
    }
}

void render_irf(const json& j, Writer& w) {
  PlotData p;
  Table t{{"path", "h", "response", "lower", "upper"}, {}};
  const auto& names = j.at("ordering");
  const auto& v = j.at("var");
  paths_out(v.at("response"), v.at("lower"), v.at("upper"), names, "var:", "->", p, &t);
  paths_out(j.at("vecm").at("response"), nullptr, nullptr, names, "vecm:", "->", p, &t);
  w.table("irf", t);
  w.plot("irf", p);
}

void render_fevd(const json& j, Writer& w) {
  PlotData p;
  const auto& names = j.at("ordering");
  Table t{{"variable", "step"}, {}};
  for (const auto& n : names) t.header.push_back(n.get<std::string>());
  const auto& share = j.at("share");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t s = 0; s < share.size(); ++s) {
      std::vector<std::string> row{cell(names[i]), std::to_string(s)};
      for (std::size_t k = 0; k < names.size(); ++k) row.push_back(cell(share[s][i][k]));
      t.add_row(std::move(row));
    }
  paths_out(share, j.at("lower"), j.at("upper"), names, "", "->", p, nullptr);
  w.table("fevd", t);
  w.plot("fevd", p);
}

void render_embed(const json& j, Writer& w) {
  Table t{{"year", "similarity", "docs"}, {}};
  PlotData p;
  for (const auto& pt : j.at("points")) {
    t.add_row({cell(pt["year"]), cell(pt["value"]), cell(pt["docs"])});
    p.add("similarity", pt["year"], pt["value"]);
  }
  const auto& loss = j.at("epoch_loss");
  for (std::size_t e = 0; e < loss.size(); ++e) p.add("epoch_loss", e + 1, loss[e]);
  w.table("similarity", t);
  w.plot("embed", p);
}

struct Section {
  std::string name;
  std::string artifact;
  std::function<void(const json&, Writer&)> render;
};

const std::vector<Section>& sections_table() {
  static const std::vector<Section> s{
      {"ingest", "ingest.json", render_ingest},
      {"select-k", "select_k.json", render_select_k},
      {"fit-topics", "topics/summary.json", render_topics},
      {"trends", "trends.json", render_trends},
      {"unitroot", "unitroot.json", render_unitroot},
      {"regress", "regress.json", render_regress},
      {"cointegration", "cointegration.json", render_cointegration},
      {"var", "var.json", render_var},
      {"vecm", "vecm.json", render_vecm},
      {"granger", "granger.json", render_granger},
      {"irf", "irf.json", render_irf},
      {"fevd", "fevd.json", render_fevd},
      {"embed", "similarity.json", render_embed},
  };
  return s;
}

}  // namespace

std::vector<std::string> emit_report(const fs::path& output_dir, ReportFormat format,
                                     const std::vector<std::string>& sections) {
  const auto& all = sections_table();
  for (const auto& name : sections)
    if (std::none_of(all.begin(), all.end(), [&](const Section& s) { return s.name == name; }))
      throw ValidationError(fmt::format("report: unknown section '{}'", name));
  Writer w(output_dir, format);
  int rendered = 0;
  for (const auto& s : all) {
    const bool requested = std::find(sections.begin(), sections.end(), s.name) != sections.end();
    if (!sections.empty() && !requested) continue;
    const auto path = output_dir / s.artifact;
    if (!fs::exists(path)) {
      if (requested) throw ValidationError(fmt::format("report: section '{}' has no artifact", s.name));
      continue;
    }
    s.render(load(path), w);
    ++rendered;
  }
  if (rendered == 0) throw ValidationError("report: no stage artifacts to render");
  return w.written();
}

}  // namespace topictrend::pipeline
